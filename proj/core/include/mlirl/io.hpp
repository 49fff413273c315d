#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mlirl/demos.hpp"
#include "mlirl/env.hpp"
#include "mlirl/likelihood.hpp"
#include "mlirl/net.hpp"

namespace mlirl {

/// Environment document (schema "mdp/v1"): the MDP tensors, the feature
/// table, and free-form metadata (seed, audits). Round-trips bit-exactly.
void save_environment(const std::filesystem::path& path, const Mdp& mdp,
                      const FeatureMap& features,
                      const std::map<std::string, std::string>& metadata = {});

struct EnvBundle {
    Mdp mdp;
    FeatureMap features;
    std::map<std::string, std::string> metadata;
};
EnvBundle load_environment(const std::filesystem::path& path);

/// Trajectories as JSONL, one {"states":[...],"actions":[...]} per line.
void save_trajectories_jsonl(const std::filesystem::path& path,
                             const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> load_trajectories_jsonl(const std::filesystem::path& path);

/// Expert sidecar (schema "expert/v1"): oracle policy and soft Q-table the
/// demos were sampled from, plus the sampling horizon.
void save_expert_sidecar(const std::filesystem::path& path, const TabularPolicy& policy,
                         const SoftQTable& q, int horizon);
struct ExpertSidecar {
    TabularPolicy policy;
    SoftQTable q;
    int horizon = 0;
};
ExpertSidecar load_expert_sidecar(const std::filesystem::path& path);

/// Net checkpoint (schema "net/v1"): width, dim, radius, signs, and both
/// weight matrices as base64-encoded little-endian doubles; bit-exact.
void save_net(const std::filesystem::path& path, const TwoLayerNet& net);
TwoLayerNet load_net(const std::filesystem::path& path);

/// Diagnostics CSV: header plus one row per record, full-precision decimals,
/// flushed per row.
class DiagnosticsWriter {
public:
    /// Truncates or appends; writes the header only when starting fresh.
    DiagnosticsWriter(const std::filesystem::path& path, bool append);
    void write(const DiagnosticsRecord& record);

    static const char* header();

private:
    std::filesystem::path path_;
};

std::vector<DiagnosticsRecord> load_diagnostics_csv(const std::filesystem::path& path);
void save_diagnostics_csv(const std::filesystem::path& path,
                          const std::vector<DiagnosticsRecord>& records);

/// Debugging export of a value table (one CSV row per state).
void save_table_csv(const std::filesystem::path& path,
                    const Eigen::Ref<const Eigen::MatrixXd>& table);

/// Standalone JSON report of a concavity diagnostic ("concavity/v1").
void save_concavity_report(const std::filesystem::path& path, const ConcavityReport& report,
                           int width, double ball_radius);

/// Standalone JSON report of an MSPBE evaluation ("mspbe/v1").
void save_mspbe_report(const std::filesystem::path& path, double mspbe_value, int width,
                       double ridge);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

std::string encode_base64(const unsigned char* data, size_t size);
std::vector<unsigned char> decode_base64(const std::string& text);

}  // namespace mlirl
