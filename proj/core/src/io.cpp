#include "mlirl/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlirl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "net/v1 checkpoints store weights as little-endian doubles");

namespace mlirl {

using nlohmann::json;

namespace {

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw ConfigError("failed writing " + path.string());
}

void require_schema(const json& doc, const std::string& schema,
                    const std::filesystem::path& path) {
    if (!doc.contains("schema") || doc["schema"] != schema)
        throw ConfigError(path.string() + ": expected schema \"" + schema + "\"");
}

json matrix_to_json(const Eigen::Ref<const RowMatrixXd>& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

RowMatrixXd matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw ConfigError("expected a nonempty matrix");
    const Eigen::Index n_rows = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index n_cols = static_cast<Eigen::Index>(rows[0].size());
    RowMatrixXd m(n_rows, n_cols);
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n_cols)
            throw ConfigError("ragged matrix rows");
        for (Eigen::Index j = 0; j < n_cols; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

std::string matrix_to_base64(const RowMatrixXd& m) {
    return encode_base64(reinterpret_cast<const unsigned char*>(m.data()),
                         sizeof(double) * static_cast<size_t>(m.size()));
}

RowMatrixXd matrix_from_base64(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
    const std::vector<unsigned char> bytes = decode_base64(text);
    if (bytes.size() != sizeof(double) * static_cast<size_t>(rows) * cols)
        throw ConfigError("net/v1: weight blob has wrong size");
    RowMatrixXd m(rows, cols);
    std::memcpy(m.data(), bytes.data(), bytes.size());
    return m;
}

}  // namespace

void save_environment(const std::filesystem::path& path, const Mdp& mdp,
                      const FeatureMap& features,
                      const std::map<std::string, std::string>& metadata) {
    json doc;
    doc["schema"] = "mdp/v1";
    doc["n_states"] = mdp.n_states;
    doc["n_actions"] = mdp.n_actions;
    doc["discount"] = mdp.discount;
    doc["transition"] = matrix_to_json(mdp.transition);
    json init = json::array();
    for (int s = 0; s < mdp.n_states; ++s) init.push_back(mdp.initial_dist[s]);
    doc["initial_dist"] = std::move(init);
    doc["true_reward"] = matrix_to_json(mdp.true_reward);
    doc["features"] = {{"dim", features.dim}, {"table", matrix_to_json(features.table)}};
    doc["metadata"] = metadata;
    write_json(path, doc);
}

EnvBundle load_environment(const std::filesystem::path& path) {
    const json doc = load_json(path);
    require_schema(doc, "mdp/v1", path);
    EnvBundle bundle;
    bundle.mdp.n_states = doc.at("n_states").get<int>();
    bundle.mdp.n_actions = doc.at("n_actions").get<int>();
    bundle.mdp.discount = doc.at("discount").get<double>();
    bundle.mdp.transition = matrix_from_json(doc.at("transition"));
    const auto& init = doc.at("initial_dist");
    bundle.mdp.initial_dist.resize(static_cast<Eigen::Index>(init.size()));
    for (Eigen::Index s = 0; s < bundle.mdp.initial_dist.size(); ++s)
        bundle.mdp.initial_dist[s] = init[s].get<double>();
    bundle.mdp.true_reward = matrix_from_json(doc.at("true_reward"));

    bundle.features.n_states = bundle.mdp.n_states;
    bundle.features.n_actions = bundle.mdp.n_actions;
    bundle.features.dim = doc.at("features").at("dim").get<int>();
    bundle.features.table = matrix_from_json(doc.at("features").at("table"));

    if (doc.contains("metadata"))
        for (const auto& [key, value] : doc["metadata"].items())
            bundle.metadata[key] = value.get<std::string>();

    bundle.mdp.validate();
    bundle.features.validate();
    return bundle;
}

void save_trajectories_jsonl(const std::filesystem::path& path,
                             const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const Trajectory& traj : trajectories) {
        json line;
        line["states"] = traj.states;
        line["actions"] = traj.actions;
        out << line.dump() << '\n';
    }
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<Trajectory> load_trajectories_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<Trajectory> trajectories;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json doc = json::parse(line, nullptr, /*allow_exceptions=*/true);
        Trajectory traj;
        traj.states = doc.at("states").get<std::vector<int>>();
        traj.actions = doc.at("actions").get<std::vector<int>>();
        if (traj.states.size() != traj.actions.size())
            throw ConfigError(path.string() + ": trajectory arrays differ in length");
        trajectories.push_back(std::move(traj));
    }
    return trajectories;
}

void save_expert_sidecar(const std::filesystem::path& path, const TabularPolicy& policy,
                         const SoftQTable& q, int horizon) {
    json doc;
    doc["schema"] = "expert/v1";
    doc["horizon"] = horizon;
    doc["policy"] = matrix_to_json(policy.probs);
    doc["soft_q"] = matrix_to_json(RowMatrixXd(q.values));
    write_json(path, doc);
}

ExpertSidecar load_expert_sidecar(const std::filesystem::path& path) {
    const json doc = load_json(path);
    require_schema(doc, "expert/v1", path);
    ExpertSidecar sidecar;
    sidecar.horizon = doc.at("horizon").get<int>();
    sidecar.policy.probs = matrix_from_json(doc.at("policy"));
    sidecar.q.values = matrix_from_json(doc.at("soft_q"));
    return sidecar;
}

void save_net(const std::filesystem::path& path, const TwoLayerNet& net) {
    json doc;
    doc["schema"] = "net/v1";
    doc["width"] = net.width();
    doc["dim"] = net.dim();
    doc["radius"] = net.radius();
    json signs = json::array();
    for (int j = 0; j < net.width(); ++j) signs.push_back(static_cast<int>(net.signs()[j]));
    doc["signs"] = std::move(signs);
    doc["init_weights"] = matrix_to_base64(net.init_weights());
    doc["weights"] = matrix_to_base64(net.weights());
    write_json(path, doc);
}

TwoLayerNet load_net(const std::filesystem::path& path) {
    const json doc = load_json(path);
    require_schema(doc, "net/v1", path);
    const int width = doc.at("width").get<int>();
    const int dim = doc.at("dim").get<int>();
    Eigen::VectorXd signs(width);
    const auto& sign_array = doc.at("signs");
    if (static_cast<int>(sign_array.size()) != width)
        throw ConfigError(path.string() + ": sign count mismatch");
    for (int j = 0; j < width; ++j) signs[j] = sign_array[j].get<double>();

    TwoLayerNet net(std::move(signs),
                    matrix_from_base64(doc.at("init_weights").get<std::string>(), width, dim),
                    doc.at("radius").get<double>());
    net.set_weights(matrix_from_base64(doc.at("weights").get<std::string>(), width, dim));
    return net;
}

const char* DiagnosticsWriter::header() {
    return "k,policy_log_gap,grad_norm_sq,likelihood,saddle_gap,td_residual,eta,alpha";
}

DiagnosticsWriter::DiagnosticsWriter(const std::filesystem::path& path, bool append)
    : path_(path) {
    if (append && std::filesystem::exists(path)) return;
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path_.string());
    out << header() << '\n';
}

void DiagnosticsWriter::write(const DiagnosticsRecord& r) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to " + path_.string());
    out << r.iteration << ',' << format_double(r.policy_log_gap) << ','
        << format_double(r.grad_norm_sq) << ',' << format_double(r.likelihood) << ','
        << format_double(r.saddle_gap) << ',' << format_double(r.td_residual) << ','
        << format_double(r.eta) << ',' << format_double(r.alpha) << '\n';
    out.flush();
    if (!out) throw ConfigError("failed appending to " + path_.string());
}

std::vector<DiagnosticsRecord> load_diagnostics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != DiagnosticsWriter::header())
        throw ConfigError(path.string() + ": unexpected diagnostics header");
    std::vector<DiagnosticsRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 8) throw ConfigError(path.string() + ": malformed row");
        DiagnosticsRecord r;
        r.iteration = std::stol(fields[0]);
        r.policy_log_gap = std::stod(fields[1]);
        r.grad_norm_sq = std::stod(fields[2]);
        r.likelihood = std::stod(fields[3]);
        r.saddle_gap = std::stod(fields[4]);
        r.td_residual = std::stod(fields[5]);
        r.eta = std::stod(fields[6]);
        r.alpha = std::stod(fields[7]);
        r.saddle_value = r.likelihood + r.saddle_gap;
        records.push_back(r);
    }
    return records;
}

void save_diagnostics_csv(const std::filesystem::path& path,
                          const std::vector<DiagnosticsRecord>& records) {
    DiagnosticsWriter writer(path, /*append=*/false);
    for (const DiagnosticsRecord& r : records) writer.write(r);
}

void save_table_csv(const std::filesystem::path& path,
                    const Eigen::Ref<const Eigen::MatrixXd>& table) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (Eigen::Index s = 0; s < table.rows(); ++s) {
        for (Eigen::Index a = 0; a < table.cols(); ++a)
            out << (a ? "," : "") << format_double(table(s, a));
        out << '\n';
    }
}

void save_concavity_report(const std::filesystem::path& path, const ConcavityReport& report,
                           int width, double ball_radius) {
    json doc;
    doc["schema"] = "concavity/v1";
    doc["width"] = width;
    doc["ball_radius"] = ball_radius;
    doc["pairs"] = report.pairs;
    doc["positive"] = report.positive;
    doc["max_violation"] = report.max_violation;
    doc["mean_positive"] = report.mean_positive;
    doc["median_positive"] = report.median_positive;
    write_json(path, doc);
}

void save_mspbe_report(const std::filesystem::path& path, double mspbe_value, int width,
                       double ridge) {
    json doc;
    doc["schema"] = "mspbe/v1";
    doc["width"] = width;
    doc["ridge"] = ridge;
    doc["mspbe"] = mspbe_value;
    write_json(path, doc);
}

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

namespace {
constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string encode_base64(const unsigned char* data, size_t size) {
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    for (size_t i = 0; i < size; i += 3) {
        unsigned int chunk = data[i] << 16;
        if (i + 1 < size) chunk |= data[i + 1] << 8;
        if (i + 2 < size) chunk |= data[i + 2];
        out.push_back(kBase64Alphabet[(chunk >> 18) & 63]);
        out.push_back(kBase64Alphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < size ? kBase64Alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < size ? kBase64Alphabet[chunk & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> decode_base64(const std::string& text) {
    if (text.size() % 4 != 0) throw ConfigError("base64: length not a multiple of 4");
    int lookup[256];
    std::fill(std::begin(lookup), std::end(lookup), -1);
    for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kBase64Alphabet[i])] = i;

    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        unsigned int chunk = 0;
        int padding = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            chunk <<= 6;
            if (c == '=') {
                ++padding;
            } else {
                const int v = lookup[static_cast<unsigned char>(c)];
                if (v < 0 || padding > 0) throw ConfigError("base64: invalid character");
                chunk |= static_cast<unsigned int>(v);
            }
        }
        out.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (padding < 2) out.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (padding < 1) out.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    return out;
}

}  // namespace mlirl
