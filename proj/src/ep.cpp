#include "dare/ep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dare {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

QuadratureRule single_node(double tau) {
    return {Eigen::VectorXd::Constant(1, tau), Eigen::VectorXd::Ones(1)};
}

/// Gate-branch coefficients with nonnegative weights:
/// Z(t) = flat + probit * Phi(sign * sqrt(tau) t).
struct GateWeights {
    double flat;
    double probit;
    int sign;
};

GateWeights gate_weights(double rho_r, int num_options) {
    const double uniform = 1.0 / num_options;
    if (rho_r >= uniform) return {uniform, rho_r - uniform, +1};
    // rho_r + (1/K - rho_r) * (1 - Phi(t)) rewritten with a positive coefficient.
    return {rho_r, uniform - rho_r, -1};
}

double max_abs_diff(const GaussianNat& a, const GaussianNat& b) {
    return std::max(std::abs(a.precision - b.precision), std::abs(a.shift - b.shift));
}

double max_abs_diff(const GammaNat& a, const GammaNat& b) {
    return std::max(std::abs(a.alpha - b.alpha), std::abs(a.rate - b.rate));
}

Eigen::VectorXd normalised_log(const Eigen::VectorXd& log_w) {
    const double m = log_w.maxCoeff();
    const double lse = m + std::log((log_w.array() - m).exp().sum());
    return (log_w.array() - lse).matrix();
}

}  // namespace

void EpConfig::check() const {
    std::vector<std::string> v;
    if (max_sweeps < 1) v.emplace_back("ep: max_sweeps must be >= 1");
    if (!(convergence_eps > 0.0)) v.emplace_back("ep: convergence_eps must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) v.emplace_back("ep: damping must be in (0, 1]");
    if (tau_quadrature_nodes < 2) v.emplace_back("ep: tau_quadrature_nodes must be >= 2");
    if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------

QuadratureRule reweight_rule(const QuadratureRule& rule, const GammaNat& rule_source, const GammaNat& target) {
    const double da = target.alpha - rule_source.alpha;
    const double db = target.rate - rule_source.rate;
    const auto n = rule.nodes.size();
    Eigen::VectorXd logw(n);
    for (Eigen::Index i = 0; i < n; ++i)
        logw[i] = std::log(rule.weights[i]) + da * std::log(rule.nodes[i]) - db * rule.nodes[i];
    const double m = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - m).exp().matrix();
    w /= w.sum();
    return {rule.nodes, std::move(w)};
}

namespace {

/// Per-node tilted statistics of t, combined over the precision rule.
struct NodeStats {
    Eigen::VectorXd means, vars, omega;
    double log_z = 0.0;
    double p_correct = 0.0;
    double p_bar = 0.0;  ///< E[Phi(sqrt(tau) t)] under the cavity
    double q_bar = 0.0;  ///< E[Phi(-sqrt(tau) t)] under the cavity
};

// Linear-domain evaluation; returns false when some node's mass is too
// small to represent, in which case the log-domain path is used.
bool tilt_linear(double m, double v, const QuadratureRule& rule, const GateWeights& gw, double rho_r, NodeStats& st) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const auto n = rule.nodes.size();
    st.means.resize(n);
    st.vars.resize(n);
    st.omega.resize(n);
    double z_total = 0.0, pc = 0.0;
    st.p_bar = st.q_bar = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = rule.weights[i];
        const double s2 = v + 1.0 / rule.nodes[i];
        const double s = std::sqrt(s2);
        const double z = m / s;
        double p, q;
        if (z < 0.0) {
            p = 0.5 * std::erfc(-z / std::numbers::sqrt2);
            q = 1.0 - p;
        } else {
            q = 0.5 * std::erfc(z / std::numbers::sqrt2);
            p = 1.0 - q;
        }
        st.p_bar += w * p;
        st.q_bar += w * q;
        const double zi = gw.flat + gw.probit * (gw.sign > 0 ? p : q);
        if (w > 0.0 && !(zi > 1e-280)) return false;
        const double zs = gw.sign * z;
        const double r = gw.probit > 0.0 ? gw.probit * kInvSqrt2Pi * std::exp(-0.5 * zs * zs) / zi : 0.0;
        const double g = gw.sign * r / s;
        const double h = -zs * r / s2 - g * g;
        st.means[i] = m + v * g;
        st.vars[i] = std::max(v + v * v * h, kVarianceFloor);
        st.omega[i] = w * zi;
        z_total += w * zi;
        pc += w * rho_r * p;
    }
    if (!(z_total > 1e-280)) return false;
    st.omega /= z_total;
    st.log_z = std::log(z_total);
    st.p_correct = pc / z_total;
    return true;
}

void tilt_log_domain(double m, double v, const QuadratureRule& rule, const GateWeights& gw, double rho_r,
                     NodeStats& st) {
    const double log_flat = gw.flat > 0.0 ? std::log(gw.flat) : kNegInf;
    const double log_probit = gw.probit > 0.0 ? std::log(gw.probit) : kNegInf;
    const double log_rho_r = rho_r > 0.0 ? std::log(rho_r) : kNegInf;
    const auto n = rule.nodes.size();
    Eigen::VectorXd log_wz(n), log_pc(n);
    st.means.resize(n);
    st.vars.resize(n);
    st.p_bar = st.q_bar = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = rule.weights[i];
        const double s2 = v + 1.0 / rule.nodes[i];
        const double s = std::sqrt(s2);
        const double z = m / s;
        const double lp = std_normal_log_cdf(z);
        const double lq = std_normal_log_cdf(-z);
        st.p_bar += w * std::exp(lp);
        st.q_bar += w * std::exp(lq);
        st.means[i] = m;
        st.vars[i] = v;
        log_pc[i] = kNegInf;
        log_wz[i] = kNegInf;
        if (w <= 0.0) continue;

        const double zs = gw.sign * z;
        const double log_mass = log_probit + (gw.sign > 0 ? lp : lq);
        const double hi = std::max(log_flat, log_mass);
        if (hi == kNegInf) continue;
        const double log_zi = hi + std::log(std::exp(log_flat - hi) + std::exp(log_mass - hi));
        if (!(log_zi > std::log(kNegligibleMass))) continue;
        const double r = gw.probit > 0.0 ? std::exp(log_probit + std_normal_log_pdf(zs) - log_zi) : 0.0;
        const double g = gw.sign * r / s;
        const double h = -zs * r / s2 - g * g;
        st.means[i] = m + v * g;
        st.vars[i] = std::max(v + v * v * h, kVarianceFloor);
        log_wz[i] = std::log(w) + log_zi;
        log_pc[i] = std::log(w) + log_rho_r + lp;
    }

    const double mx = log_wz.maxCoeff();
    if (!(mx > kNegInf)) throw NegligibleEvidence("cell factor has negligible mass under its cavity");
    st.log_z = mx + std::log((log_wz.array() - mx).exp().sum());
    if (!(st.log_z > std::log(kNegligibleMass))) throw NegligibleEvidence("cell factor has negligible mass");
    st.omega = (log_wz.array() - st.log_z).exp().matrix();
    st.p_correct = (log_pc.array() - st.log_z).exp().sum();
}

}  // namespace

CellUpdate cell_message_update(const CellCavity& cav) {
    const int num_options = cav.answer.size();
    const double rho_r = cav.answer[cav.response];
    const GateWeights gw = gate_weights(rho_r, num_options);

    const double m = cav.ability.mean() - cav.difficulty.mean();
    const double v = cav.ability.variance() + cav.difficulty.variance();

    // Per precision node: t-moments of N(t; m, v) * (flat + probit * Phi(sign * sqrt(tau) t)).
    NodeStats st;
    if (!tilt_linear(m, v, cav.precision, gw, rho_r, st)) tilt_log_domain(m, v, cav.precision, gw, rho_r, st);
    const auto n = cav.precision.nodes.size();
    const Eigen::VectorXd& omega = st.omega;
    const Eigen::VectorXd& means = st.means;
    const Eigen::VectorXd& vars = st.vars;
    const double log_z = st.log_z;
    const double p_bar = st.p_bar;
    const double q_bar = st.q_bar;

    const double t_mean = omega.dot(means);
    double t_var = 0.0;
    double tau_mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        t_var += omega[i] * (vars[i] + (means[i] - t_mean) * (means[i] - t_mean));
        tau_mean += omega[i] * cav.precision.nodes[i];
    }
    double tau_var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        tau_var += omega[i] * (cav.precision.nodes[i] - tau_mean) * (cav.precision.nodes[i] - tau_mean);

    CellUpdate out;
    out.log_evidence = log_z;
    out.t = Gaussian1D(t_mean, std::max(t_var, kVarianceFloor));
    out.precision_mean = tau_mean;
    out.precision_variance = tau_var;

    // Chain rule through t = a - d: dlogZ/dm_a = G, dlogZ/dm_d = -G.
    const double g = (t_mean - m) / v;
    const double h = (t_var - v) / (v * v);
    const double va = cav.ability.variance();
    const double vd = cav.difficulty.variance();
    out.ability = Gaussian1D(cav.ability.mean() + va * g, std::max(va + va * va * h, kVarianceFloor));
    out.difficulty = Gaussian1D(cav.difficulty.mean() - vd * g, std::max(vd + vd * vd * h, kVarianceFloor));
    out.to_ability = out.ability.natural() - cav.ability.natural();
    out.to_difficulty = out.difficulty.natural() - cav.difficulty.natural();

    // P(c = T | r, cavity): the "knows" branch contributes rho_r * Phi per node.
    out.p_correct = std::clamp(st.p_correct, 0.0, 1.0);

    const double uniform = 1.0 / num_options;
    const double other = std::max(q_bar * uniform, kNegligibleMass);
    out.answer_log_message = Eigen::VectorXd::Constant(num_options, std::log(other));
    out.answer_log_message[cav.response] = std::log(p_bar + q_bar * uniform);
    return out;
}

// ---------------------------------------------------------------------------

double expected_prob_correct(const Gaussian1D& ability, const Gaussian1D& difficulty, const QuadratureRule& precision) {
    const double m = ability.mean() - difficulty.mean();
    const double v = ability.variance() + difficulty.variance();
    double p = 0.0;
    for (Eigen::Index i = 0; i < precision.nodes.size(); ++i)
        p += precision.weights[i] * std_normal_cdf(m / std::sqrt(v + 1.0 / precision.nodes[i]));
    return p;
}

QuadratureRule precision_rule(const FactorGraph& graph, const Posteriors& post, std::size_t q, int nodes) {
    if (graph.precision.at(q).fixed) return single_node(*graph.precision[q].fixed);
    return gamma_quadrature(post.precision.at(q), nodes);
}

Discrete predictive_response(const FactorGraph& graph, const Posteriors& post, std::size_t participant,
                             std::size_t question, int tau_nodes) {
    const double pi = expected_prob_correct(post.ability.at(participant), post.difficulty.at(question),
                                            precision_rule(graph, post, question, tau_nodes));
    const Discrete& y = post.answer.at(question);
    Eigen::VectorXd p = (pi * y.probs().array() + (1.0 - pi) / y.size()).matrix();
    p /= p.sum();
    return Discrete(std::move(p));
}

CellPosterior query_cell(const FactorGraph& graph, const Posteriors& post, std::size_t participant,
                         std::size_t question, int tau_nodes) {
    CellPosterior cell;
    cell.participant = participant;
    cell.question = question;
    const auto& a = post.ability.at(participant);
    const auto& d = post.difficulty.at(question);
    cell.p_correct = expected_prob_correct(a, d, precision_rule(graph, post, question, tau_nodes));
    cell.response_dist = predictive_response(graph, post, participant, question, tau_nodes);
    cell.t = Gaussian1D(a.mean() - d.mean(), a.variance() + d.variance());
    return cell;
}

// ---------------------------------------------------------------------------

namespace {

class EpEngine {
public:
    EpEngine(const FactorGraph& g, const EpConfig& cfg) : g_(g), cfg_(cfg) {
        const auto nc = g.cells.size();
        msg_a_.assign(nc, {});
        msg_d_.assign(nc, {});
        msg_tau_.assign(nc, {});
        msg_y_.resize(nc);
        for (std::size_t c = 0; c < nc; ++c)
            msg_y_[c] = Eigen::VectorXd::Zero(g.answer[g.cells[c].question].num_options);
        recompute_marginals();
    }

    InferenceReport run() {
        InferenceReport rep;
        for (int sweep = 1; sweep <= cfg_.max_sweeps; ++sweep) {
            recompute_marginals();
            const auto before = snapshot();
            floor_hits_in_sweep_ = 0;
            sweep_cells();
            rep.sweeps_used = sweep;
            rep.max_residual = residual(before);
            if (rep.max_residual <= cfg_.convergence_eps) {
                rep.converged = true;
                break;
            }
        }
        recompute_marginals();
        rep.skipped_updates = skipped_;
        rep.variance_floor_hits = floor_hits_;
        rep.degenerate = floor_hits_in_sweep_ > 0;
        rep.posteriors = posteriors();
        return rep;
    }

private:
    struct Snapshot {
        std::vector<GaussianNat> a, d;
        std::vector<GammaNat> tau;
        std::vector<Eigen::VectorXd> y;
    };

    bool learned(std::size_t q) const { return !g_.precision[q].fixed.has_value(); }

    void recompute_marginals() {
        marg_a_.resize(g_.num_participants());
        for (std::size_t p = 0; p < g_.num_participants(); ++p) marg_a_[p] = g_.ability_prior[p].natural();
        marg_d_.resize(g_.num_questions());
        marg_tau_.resize(g_.num_questions());
        log_y_.resize(g_.num_questions());
        for (std::size_t q = 0; q < g_.num_questions(); ++q) {
            marg_d_[q] = g_.difficulty_prior[q].natural();
            marg_tau_[q] = g_.precision[q].prior.natural();
            log_y_[q] = Eigen::VectorXd::Zero(g_.answer[q].num_options);
        }
        for (std::size_t c = 0; c < g_.cells.size(); ++c) {
            const auto& cell = g_.cells[c];
            if (!g_.ability_clamped[cell.participant]) marg_a_[cell.participant] += msg_a_[c];
            if (!g_.difficulty_clamped[cell.question]) marg_d_[cell.question] += msg_d_[c];
            if (learned(cell.question)) marg_tau_[cell.question] += msg_tau_[c];
            if (!g_.answer[cell.question].gold) log_y_[cell.question] += msg_y_[c];
        }
    }

    Snapshot snapshot() const {
        Snapshot s{marg_a_, marg_d_, marg_tau_, {}};
        s.y.reserve(log_y_.size());
        for (const auto& l : log_y_) s.y.push_back(normalised_log(l));
        return s;
    }

    double residual(const Snapshot& before) const {
        double r = 0.0;
        for (std::size_t p = 0; p < marg_a_.size(); ++p) r = std::max(r, max_abs_diff(marg_a_[p], before.a[p]));
        for (std::size_t q = 0; q < marg_d_.size(); ++q) {
            r = std::max(r, max_abs_diff(marg_d_[q], before.d[q]));
            if (learned(q)) r = std::max(r, max_abs_diff(marg_tau_[q], before.tau[q]));
            if (!g_.answer[q].gold) r = std::max(r, (normalised_log(log_y_[q]) - before.y[q]).cwiseAbs().maxCoeff());
        }
        return r;
    }

    /// Cavity precision rule for cell c; empty optional when the cavity is improper.
    std::optional<QuadratureRule> precision_cavity(std::size_t c, std::size_t q, GammaNat& cav_nat) const {
        if (!learned(q)) return single_node(*g_.precision[q].fixed);
        cav_nat = marg_tau_[q] - msg_tau_[c];
        if (!cav_nat.proper()) return std::nullopt;
        // cavity / rule density = tau^da * exp(-db * tau), up to a constant.
        const double da = cav_nat.alpha - rule_source_.alpha;
        const double db = cav_nat.rate - rule_source_.rate;
        Eigen::VectorXd logw = rule_log_weights_ + da * rule_log_nodes_ - db * rule_.nodes;
        const double mx = logw.maxCoeff();
        Eigen::VectorXd w = (logw.array() - mx).exp().matrix();
        w /= w.sum();
        // Reweighting degenerates when the cavity is far from the rule's
        // source; a collapsed rule understates the tilted variance.
        if (1.0 / w.squaredNorm() < 0.5 * rule_ess_)
            return gamma_quadrature(GammaDist::from_natural(cav_nat), cfg_.tau_quadrature_nodes);
        return QuadratureRule{rule_.nodes, std::move(w)};
    }

    std::optional<CellCavity> cavity(std::size_t c, GaussianNat& cav_a, GaussianNat& cav_d, GammaNat& cav_tau,
                                     Eigen::VectorXd& cav_y) const {
        const auto& cell = g_.cells[c];
        const std::size_t p = cell.participant;
        const std::size_t q = cell.question;
        cav_a = g_.ability_clamped[p] ? g_.ability_prior[p].natural() : marg_a_[p] - msg_a_[c];
        cav_d = g_.difficulty_clamped[q] ? g_.difficulty_prior[q].natural() : marg_d_[q] - msg_d_[c];
        if (!cav_a.proper() || !cav_d.proper()) return std::nullopt;
        auto rule = precision_cavity(c, q, cav_tau);
        if (!rule) return std::nullopt;

        const auto& node = g_.answer[q];
        Discrete y;
        if (node.gold) {
            y = Discrete::point_mass(node.num_options, *node.gold);
        } else {
            cav_y = log_y_[q] - msg_y_[c];
            y = Discrete::from_log_weights(cav_y);
        }
        return CellCavity{Gaussian1D::from_natural(cav_a), Gaussian1D::from_natural(cav_d), std::move(*rule),
                          std::move(y), cell.response};
    }

    void note_floor(const Gaussian1D& g) {
        if (g.variance() <= kVarianceFloor) {
            ++floor_hits_;
            ++floor_hits_in_sweep_;
        }
    }

    void sweep_cells() {
        const double damp = cfg_.damping;
        std::size_t current_q = std::numeric_limits<std::size_t>::max();
        for (std::size_t c = 0; c < g_.cells.size(); ++c) {
            const auto& cell = g_.cells[c];
            const std::size_t p = cell.participant;
            const std::size_t q = cell.question;
            if (q != current_q) {
                current_q = q;
                load_rule(q);
            }
            if (learned(q) && !rule_valid_) {
                ++skipped_;
                continue;
            }

            GaussianNat cav_a, cav_d;
            GammaNat cav_tau;
            Eigen::VectorXd cav_y;
            auto cav = cavity(c, cav_a, cav_d, cav_tau, cav_y);
            if (!cav) {
                ++skipped_;
                continue;
            }
            CellUpdate up;
            try {
                up = cell_message_update(*cav);
            } catch (const NegligibleEvidence&) {
                ++skipped_;
                continue;
            }

            if (!g_.ability_clamped[p]) {
                note_floor(up.ability);
                msg_a_[c] = damp * up.to_ability + (1.0 - damp) * msg_a_[c];
                marg_a_[p] = cav_a + msg_a_[c];
            }
            if (!g_.difficulty_clamped[q]) {
                note_floor(up.difficulty);
                msg_d_[c] = damp * up.to_difficulty + (1.0 - damp) * msg_d_[c];
                marg_d_[q] = cav_d + msg_d_[c];
            }
            if (learned(q) && up.precision_variance > 0.0) {
                const GammaDist proj = GammaDist::from_moments(up.precision_mean, up.precision_variance);
                const GammaNat fresh = proj.natural() - cav_tau;
                msg_tau_[c] = damp * fresh + (1.0 - damp) * msg_tau_[c];
                marg_tau_[q] = cav_tau + msg_tau_[c];
            }
            if (!g_.answer[q].gold) {
                msg_y_[c] = damp * up.answer_log_message + (1.0 - damp) * msg_y_[c];
                log_y_[q] = cav_y + msg_y_[c];
            }
        }
    }

    /// Cavity of cell c, falling back to the full marginals when the cavity is improper.
    std::optional<CellCavity> reporting_cavity(std::size_t c) const {
        GaussianNat cav_a, cav_d;
        GammaNat cav_tau;
        Eigen::VectorXd cav_y;
        if (auto cav = cavity(c, cav_a, cav_d, cav_tau, cav_y)) return cav;
        const auto& cell = g_.cells[c];
        const std::size_t q = cell.question;
        const auto& node = g_.answer[q];
        QuadratureRule rule = learned(q) ? gamma_quadrature(GammaDist::from_natural(marg_tau_[q]), cfg_.tau_quadrature_nodes)
                                         : single_node(*g_.precision[q].fixed);
        return CellCavity{Gaussian1D::from_natural(marg_a_[cell.participant]), Gaussian1D::from_natural(marg_d_[q]),
                          std::move(rule),
                          node.gold ? Discrete::point_mass(node.num_options, *node.gold)
                                    : Discrete::from_log_weights(log_y_[q]),
                          cell.response};
    }

    Posteriors posteriors() {
        // Variables that received no message report their prior object unchanged.
        std::vector<bool> touched_a(g_.num_participants(), false), touched_q(g_.num_questions(), false);
        for (const auto& cell : g_.cells) {
            touched_a[cell.participant] = true;
            touched_q[cell.question] = true;
        }

        Posteriors post;
        for (std::size_t p = 0; p < g_.num_participants(); ++p)
            post.ability.push_back(g_.ability_clamped[p] || !touched_a[p] ? g_.ability_prior[p]
                                                                           : Gaussian1D::from_natural(marg_a_[p]));
        for (std::size_t q = 0; q < g_.num_questions(); ++q) {
            const bool fixed = g_.difficulty_clamped[q] || !touched_q[q];
            post.difficulty.push_back(fixed ? g_.difficulty_prior[q] : Gaussian1D::from_natural(marg_d_[q]));
            if (!learned(q))
                post.precision.push_back(GammaDist::point_mass(*g_.precision[q].fixed));
            else
                post.precision.push_back(touched_q[q] ? GammaDist::from_natural(marg_tau_[q]) : g_.precision[q].prior);
            const auto& node = g_.answer[q];
            if (node.gold)
                post.answer.push_back(Discrete::point_mass(node.num_options, *node.gold));
            else
                post.answer.push_back(touched_q[q] ? Discrete::from_log_weights(log_y_[q])
                                                   : Discrete::uniform(node.num_options));
        }

        post.cells.reserve(g_.cells.size());
        std::size_t current_q = std::numeric_limits<std::size_t>::max();
        for (std::size_t c = 0; c < g_.cells.size(); ++c) {
            const auto& cell = g_.cells[c];
            if (cell.question != current_q) {
                current_q = cell.question;
                load_rule(current_q);
            }
            CellPosterior cp;
            cp.participant = cell.participant;
            cp.question = cell.question;
            cp.response_dist = Discrete::point_mass(g_.answer[cell.question].num_options, cell.response);
            const auto& a = post.ability[cell.participant];
            const auto& d = post.difficulty[cell.question];
            cp.t = Gaussian1D(a.mean() - d.mean(), a.variance() + d.variance());
            try {
                const auto up = cell_message_update(*reporting_cavity(c));
                cp.p_correct = up.p_correct;
                cp.t = up.t;
            } catch (const NegligibleEvidence&) {
                cp.p_correct = g_.answer[cell.question].gold == cell.response ? 1.0 : 0.0;
            }
            post.cells.push_back(std::move(cp));
        }
        return post;
    }

    void load_rule(std::size_t q) {
        rule_valid_ = learned(q) && marg_tau_[q].proper();
        if (rule_valid_) {
            rule_source_ = marg_tau_[q];
            rule_ = gamma_quadrature(GammaDist::from_natural(rule_source_), cfg_.tau_quadrature_nodes);
            rule_log_nodes_ = rule_.nodes.array().log().matrix();
            rule_log_weights_ = rule_.weights.array().log().matrix();
            rule_ess_ = 1.0 / rule_.weights.squaredNorm();
        }
    }

    const FactorGraph& g_;
    const EpConfig& cfg_;

    std::vector<GaussianNat> marg_a_, marg_d_, msg_a_, msg_d_;
    std::vector<GammaNat> marg_tau_, msg_tau_;
    std::vector<Eigen::VectorXd> log_y_, msg_y_;

    QuadratureRule rule_;
    Eigen::VectorXd rule_log_nodes_, rule_log_weights_;
    GammaNat rule_source_{0.0, 1.0};
    double rule_ess_ = 1.0;
    bool rule_valid_ = false;

    std::size_t skipped_ = 0;
    std::size_t floor_hits_ = 0;
    std::size_t floor_hits_in_sweep_ = 0;
};

}  // namespace

InferenceReport infer(const FactorGraph& graph, const EpConfig& config) {
    config.check();
    EpEngine engine(graph, config);
    return engine.run();
}

}  // namespace dare
