#include "mlirl/env.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlirl/errors.hpp"

namespace mlirl {

namespace {
constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& p, const char* what) {
    if (p.minCoeff() < 0.0) throw ConfigError(std::string(what) + ": negative entry");
    if (std::abs(p.sum() - 1.0) > kStochasticTol)
        throw ConfigError(std::string(what) + ": does not sum to 1");
}
}  // namespace

void Mdp::validate() const {
    if (n_states < 1 || n_actions < 1) throw ConfigError("Mdp: empty state or action space");
    if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("Mdp: discount must be in (0,1)");
    if (transition.rows() != n_pairs() || transition.cols() != n_states)
        throw ConfigError("Mdp: transition tensor has wrong shape");
    if (initial_dist.size() != n_states) throw ConfigError("Mdp: initial_dist has wrong shape");
    if (true_reward.rows() != n_states || true_reward.cols() != n_actions)
        throw ConfigError("Mdp: true_reward has wrong shape");
    for (int i = 0; i < n_pairs(); ++i) check_distribution(transition.row(i), "Mdp transition row");
    check_distribution(initial_dist, "Mdp initial_dist");
}

void FeatureMap::validate() const {
    if (dim <= 2) throw ConfigError("FeatureMap: feature dimension must exceed 2");
    if (table.rows() != static_cast<Eigen::Index>(n_states) * n_actions || table.cols() != dim)
        throw ConfigError("FeatureMap: table has wrong shape");
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        if (std::abs(table.row(i).norm() - 1.0) > 1e-12)
            throw ConfigError("FeatureMap: row " + std::to_string(i) + " is not unit norm");
        for (Eigen::Index j = 0; j < i; ++j)
            if (table.row(i) == table.row(j))
                throw ConfigError("FeatureMap: rows " + std::to_string(j) + " and " +
                                  std::to_string(i) + " coincide (psi not injective)");
    }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
    TabularPolicy p;
    p.probs = RowMatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
    return p;
}

void TabularPolicy::validate() const {
    for (Eigen::Index s = 0; s < probs.rows(); ++s)
        check_distribution(probs.row(s), "TabularPolicy row");
}

void TabularPolicy::require_strictly_positive() const {
    if (probs.size() == 0 || probs.minCoeff() <= 0.0)
        throw ContractViolation("policy must be strictly positive everywhere");
}

void Trajectory::validate(int n_states, int n_actions) const {
    if (states.size() != actions.size())
        throw ConfigError("Trajectory: states/actions length mismatch");
    for (int s : states)
        if (s < 0 || s >= n_states) throw ConfigError("Trajectory: state index out of range");
    for (int a : actions)
        if (a < 0 || a >= n_actions) throw ConfigError("Trajectory: action index out of range");
}

namespace {

RowMatrixXd random_unit_features(Eigen::Index rows, int dim, RngStream& rng) {
    RowMatrixXd table(rows, dim);
    for (Eigen::Index i = 0; i < rows; ++i) {
        do {
            for (int j = 0; j < dim; ++j) table(i, j) = rng.normal();
        } while (table.row(i).norm() == 0.0);
        table.row(i) /= table.row(i).norm();
    }
    return table;
}

double gamma_draw(double shape, RngStream& rng) {
    // Marsaglia-Tsang, with the standard shape<1 boost.
    if (shape < 1.0) {
        const double u = std::max(rng.uniform(), 1e-300);
        return gamma_draw(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

Eigen::VectorXd dirichlet_row(int n, double concentration, RngStream& rng) {
    Eigen::VectorXd row(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        row[i] = std::max(gamma_draw(concentration, rng), 1e-300);
        sum += row[i];
    }
    row /= sum;
    // Normalize exactly enough for the 1e-12 stochasticity invariant.
    row[n - 1] += 1.0 - row.sum();
    return row;
}

}  // namespace

std::pair<Mdp, FeatureMap> build_gridworld(int rows, int cols, double slip_prob, double discount,
                                           int feature_dim, RngStream& rng) {
    if (rows < 1 || cols < 1 || static_cast<long>(rows) * cols < 2)
        throw ConfigError("build_gridworld: grid must have at least 2 cells");
    if (slip_prob < 0.0 || slip_prob >= 1.0)
        throw ConfigError("build_gridworld: slip_prob must be in [0,1)");
    if (!(discount > 0.0 && discount < 1.0))
        throw ConfigError("build_gridworld: discount must be in (0,1)");
    if (feature_dim <= 2) throw ConfigError("build_gridworld: feature_dim must exceed 2");

    const int n_states = rows * cols;
    const int n_actions = 4;
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};

    Mdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.discount = discount;
    mdp.transition = RowMatrixXd::Zero(n_states * n_actions, n_states);
    mdp.initial_dist = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
    mdp.true_reward = RowMatrixXd::Zero(n_states, n_actions);

    const int goal = n_states - 1;  // bottom-right cell
    mdp.true_reward.row(goal).setConstant(kGridworldGoalReward);

    auto move = [&](int r, int c, int dir) {
        const int nr = r + dr[dir];
        const int nc = c + dc[dir];
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) return r * cols + c;
        return nr * cols + nc;
    };

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int s = r * cols + c;
            for (int a = 0; a < n_actions; ++a) {
                auto row = mdp.transition.row(mdp.pair_index(s, a));
                row(move(r, c, a)) += 1.0 - slip_prob;
                for (int other = 0; other < n_actions; ++other) {
                    if (other == a) continue;
                    row(move(r, c, other)) += slip_prob / 3.0;
                }
            }
        }
    }

    FeatureMap features;
    features.n_states = n_states;
    features.n_actions = n_actions;
    features.dim = feature_dim;
    features.table = random_unit_features(mdp.n_pairs(), feature_dim, rng);

    mdp.validate();
    features.validate();
    return {std::move(mdp), std::move(features)};
}

std::pair<Mdp, FeatureMap> build_random_mdp(int n_states, int n_actions, int feature_dim,
                                            double concentration, double discount,
                                            RngStream& rng) {
    if (n_states < 2 || n_actions < 2)
        throw ConfigError("build_random_mdp: need at least 2 states and 2 actions");
    if (feature_dim <= 2) throw ConfigError("build_random_mdp: feature_dim must exceed 2");
    if (concentration <= 0.0) throw ConfigError("build_random_mdp: concentration must be positive");
    if (!(discount > 0.0 && discount < 1.0))
        throw ConfigError("build_random_mdp: discount must be in (0,1)");

    Mdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.discount = discount;
    mdp.transition.resize(n_states * n_actions, n_states);
    for (int i = 0; i < mdp.n_pairs(); ++i)
        mdp.transition.row(i) = dirichlet_row(n_states, concentration, rng).transpose();
    mdp.initial_dist = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
    mdp.true_reward.resize(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) mdp.true_reward(s, a) = rng.normal();

    FeatureMap features;
    features.n_states = n_states;
    features.n_actions = n_actions;
    features.dim = feature_dim;
    features.table = random_unit_features(mdp.n_pairs(), feature_dim, rng);

    mdp.validate();
    features.validate();
    return {std::move(mdp), std::move(features)};
}

Eigen::MatrixXd induced_state_chain(const Mdp& mdp, const TabularPolicy& policy) {
    Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            chain.row(s) += policy.probs(s, a) * mdp.transition.row(mdp.pair_index(s, a));
    return chain;
}

namespace {

// Kosaraju strongly connected components on the positive-probability graph.
std::vector<int> scc_labels(const Eigen::MatrixXd& chain) {
    const int n = static_cast<int>(chain.rows());
    std::vector<std::vector<int>> fwd(n), bwd(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (chain(i, j) > 0.0) {
                fwd[i].push_back(j);
                bwd[j].push_back(i);
            }

    std::vector<int> order;
    order.reserve(n);
    std::vector<char> seen(n, 0);
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        // Iterative DFS recording finish order.
        std::vector<std::pair<int, size_t>> stack{{start, 0}};
        seen[start] = 1;
        while (!stack.empty()) {
            auto& [v, idx] = stack.back();
            if (idx < fwd[v].size()) {
                const int w = fwd[v][idx++];
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }

    std::vector<int> label(n, -1);
    int n_comp = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (label[*it] != -1) continue;
        std::vector<int> stack{*it};
        label[*it] = n_comp;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : bwd[v])
                if (label[w] == -1) {
                    label[w] = n_comp;
                    stack.push_back(w);
                }
        }
        ++n_comp;
    }
    return label;
}

}  // namespace

Eigen::VectorXd stationary_distribution(const Mdp& mdp, const TabularPolicy& policy) {
    policy.validate();
    const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
    const int n = mdp.n_states;

    const std::vector<int> label = scc_labels(chain);
    const int n_comp = *std::max_element(label.begin(), label.end()) + 1;
    if (n_comp > 1) {
        // Find a closed class (no outgoing edges) and name it.
        std::vector<char> closed(n_comp, 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (chain(i, j) > 0.0 && label[i] != label[j]) closed[label[i]] = 0;
        std::ostringstream msg;
        msg << "stationary_distribution: induced chain is reducible; absorbing class {";
        for (int comp = 0; comp < n_comp; ++comp) {
            if (!closed[comp]) continue;
            bool first = true;
            for (int i = 0; i < n; ++i)
                if (label[i] == comp) {
                    msg << (first ? "" : ",") << i;
                    first = false;
                }
            break;
        }
        msg << "}";
        throw DiagnosticError(msg.str());
    }

    // mu^T P = mu^T with sum(mu) = 1, solved as an overdetermined system.
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = chain.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::VectorXd mu = system.colPivHouseholderQr().solve(rhs);
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();

    if ((mu.transpose() * chain - mu.transpose()).cwiseAbs().sum() > 1e-10)
        throw ConvergenceError("stationary_distribution: fixed-point residual too large",
                               (mu.transpose() * chain - mu.transpose()).cwiseAbs().sum());

    Eigen::VectorXd mu_sa(mdp.n_pairs());
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            mu_sa[mdp.pair_index(s, a)] = mu[s] * policy.probs(s, a);
    return mu_sa;
}

Eigen::VectorXd occupancy_measure(const Mdp& mdp, const TabularPolicy& policy) {
    policy.validate();
    const int n = mdp.n_states;
    const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
    Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - mdp.discount * chain.transpose();
    Eigen::VectorXd rho =
        system.partialPivLu().solve((1.0 - mdp.discount) * mdp.initial_dist);

    Eigen::VectorXd d(mdp.n_pairs());
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            d[mdp.pair_index(s, a)] = rho[s] * policy.probs(s, a);
    return d;
}

Trajectory sample_trajectory(const Mdp& mdp, const TabularPolicy& policy, int horizon,
                             RngStream& rng) {
    if (horizon < 1) throw ContractViolation("sample_trajectory: horizon must be >= 1");
    Trajectory traj;
    traj.states.reserve(horizon);
    traj.actions.reserve(horizon);
    int s = rng.categorical(mdp.initial_dist);
    for (int t = 0; t < horizon; ++t) {
        const int a = rng.categorical(policy.probs.row(s).transpose());
        traj.states.push_back(s);
        traj.actions.push_back(a);
        s = rng.categorical(mdp.transition.row(mdp.pair_index(s, a)).transpose());
    }
    return traj;
}

int horizon_for_tail(double discount, double tail_tol) {
    if (!(discount > 0.0 && discount < 1.0) || tail_tol <= 0.0)
        throw ConfigError("horizon_for_tail: invalid parameters");
    const double h = std::log(tail_tol * (1.0 - discount)) / std::log(discount);
    return std::max(1, static_cast<int>(std::ceil(h)));
}

double second_eigenvalue_modulus(const Mdp& mdp, const TabularPolicy& policy) {
    const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(chain, /*computeEigenvectors=*/false);
    std::vector<double> moduli(mdp.n_states);
    for (int i = 0; i < mdp.n_states; ++i) moduli[i] = std::abs(solver.eigenvalues()[i]);
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    return mdp.n_states > 1 ? moduli[1] : 0.0;
}

double feature_regularity_diagnostic(const FeatureMap& features, int n_directions,
                                     RngStream& rng) {
    double lowest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_directions; ++k) {
        Eigen::VectorXd w(features.dim);
        for (int j = 0; j < features.dim; ++j) w[j] = rng.normal();
        w /= w.norm();
        lowest = std::min(lowest, (features.table * w).cwiseAbs().minCoeff());
    }
    return lowest;
}

}  // namespace mlirl
