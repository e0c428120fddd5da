#include "gfi/binom_np.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gfi/special.hpp"

namespace gfi {

namespace {

constexpr int kBatchRejectCap = 500;
constexpr int kMemberRejectCap = 200;
constexpr long long kInitialLive = 64;

double gamma_lo_limit(long long y, double u) {
    return y > 0 ? gamma_quantile(static_cast<double>(y), 1.0, 1.0 - u) : 0.0;
}

double gamma_hi_limit(long long y, double u) {
    return gamma_quantile(static_cast<double>(y) + 1.0, 1.0, 1.0 - u);
}

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

// Sorted disjoint union of half-open windows (lo, hi].
std::vector<Window> merge_windows(std::vector<Window> ws) {
    std::sort(ws.begin(), ws.end(), [](const Window& a, const Window& b) { return a.lo < b.lo; });
    std::vector<Window> out;
    for (const auto& w : ws) {
        if (!(w.hi > w.lo)) continue;
        if (!out.empty() && w.lo <= out.back().hi) {
            out.back().hi = std::max(out.back().hi, w.hi);
        } else {
            out.push_back(w);
        }
    }
    return out;
}

double windows_total(const std::vector<Window>& ws) {
    double t = 0.0;
    for (const auto& w : ws) t += w.hi - w.lo;
    return t;
}

double draw_from_windows(const std::vector<Window>& ws, double total, Rng& rng) {
    double x = rng.uniform() * total;
    for (const auto& w : ws) {
        const double len = w.hi - w.lo;
        if (x <= len) return std::min(w.lo + x, w.hi);
        x -= len;
    }
    return ws.back().hi;
}

// Per-observation mu interval endpoints with warm starts in p.
double obs_mu_lo(long long y, long long n, double u, double* warm_p) {
    if (y == 0) return 0.0;
    const double a = static_cast<double>(y);
    const double b = static_cast<double>(n - y) + 1.0;
    const double x0 = (warm_p && *warm_p > 0.0 && *warm_p < 1.0) ? *warm_p : a / (a + b);
    const double p = inv_reg_inc_beta_warm(a, b, 1.0 - u, x0);
    if (warm_p) *warm_p = p;
    return n * p;
}

double obs_mu_hi(long long y, long long n, double u, double* warm_p) {
    if (y >= n) return static_cast<double>(n);
    const double a = static_cast<double>(y) + 1.0;
    const double b = static_cast<double>(n - y);
    const double x0 = (warm_p && *warm_p > 0.0 && *warm_p < 1.0) ? *warm_p : a / (a + b);
    const double p = inv_reg_inc_beta_warm(a, b, 1.0 - u, x0);
    if (warm_p) *warm_p = p;
    return n * p;
}

double log_box_width(long long y, long long n, double p) {
    const double w = binom_cdf(n, p, y) - binom_cdf(n, p, y - 1);
    if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(w);
}

// Grouped view used when probing candidate configurations.
struct ExtGroup {
    long long y = 0;
    double u_min = 0.0;
    double u_max = 0.0;
};

// Common mu interval at a rung for grouped extremes; empty when lo >= hi.
std::pair<double, double> probe_rung(const std::vector<ExtGroup>& gs, long long n,
                                     std::vector<double>* warm_lo, std::vector<double>* warm_hi) {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gs.size(); ++g) {
        if (gs[g].y > n) return {1.0, 0.0};
        lo = std::max(lo, obs_mu_lo(gs[g].y, n, gs[g].u_min, warm_lo ? &(*warm_lo)[g] : nullptr));
        hi = std::min(hi, obs_mu_hi(gs[g].y, n, gs[g].u_max, warm_hi ? &(*warm_hi)[g] : nullptr));
    }
    return {lo, hi};
}

// Smallest rung with a nonempty common interval, scanning no further than
// `cap` (which the caller knows to be feasible). Returns -1 when the scan
// fails, which signals a logic error upstream.
long long probe_n_min(const std::vector<ExtGroup>& gs, long long first_n, long long cap) {
    std::vector<double> warm_lo(gs.size(), -1.0);
    std::vector<double> warm_hi(gs.size(), -1.0);
    for (long long n = first_n; n <= cap; ++n) {
        const auto [lo, hi] = probe_rung(gs, n, &warm_lo, &warm_hi);
        if (lo < hi) return n;
    }
    return -1;
}

} // namespace

PBounds p_bounds(long long y, long long n, double u) {
    if (n < 1) throw std::domain_error("p_bounds: n must be at least 1");
    if (y < 0 || y > n) throw std::domain_error("p_bounds: y must lie in [0, n]");
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("p_bounds: u must lie strictly inside (0, 1)");
    PBounds out;
    out.lower = y == 0 ? 0.0
                       : inv_reg_inc_beta(static_cast<double>(y),
                                          static_cast<double>(n - y) + 1.0, 1.0 - u);
    out.upper = y == n ? 1.0
                       : inv_reg_inc_beta(static_cast<double>(y) + 1.0,
                                          static_cast<double>(n - y), 1.0 - u);
    return out;
}

NpSolutionSet solution_set(const std::vector<double>& u, const std::vector<long long>& y,
                           const NpSolveConfig& cfg) {
    if (u.size() != y.size() || y.empty())
        throw std::invalid_argument("solution_set: u and y must be nonempty and equal length");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0) throw std::invalid_argument("solution_set: counts must be nonnegative");
        if (!(u[i] > 0.0 && u[i] < 1.0))
            throw std::invalid_argument("solution_set: uniforms must lie inside (0, 1)");
    }
    if (!(cfg.eps2 > 0.0)) throw std::invalid_argument("solution_set: eps2 must be positive");

    const std::size_t m = y.size();
    const long long first_n = std::max<long long>(*std::max_element(y.begin(), y.end()), 1);
    std::vector<double> glo(m), ghi(m), warm_lo(m, -1.0), warm_hi(m, -1.0);
    for (std::size_t i = 0; i < m; ++i) {
        glo[i] = gamma_lo_limit(y[i], u[i]);
        ghi[i] = gamma_hi_limit(y[i], u[i]);
    }

    NpSolutionSet out;
    bool seen_feasible = false;
    for (long long n = first_n; n - first_n < cfg.max_candidates; ++n) {
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        bool at_limit = true;
        for (std::size_t i = 0; i < m; ++i) {
            const double li = obs_mu_lo(y[i], n, u[i], &warm_lo[i]);
            const double hii = obs_mu_hi(y[i], n, u[i], &warm_hi[i]);
            lo = std::max(lo, li);
            hi = std::min(hi, hii);
            if (std::fabs(li - glo[i]) >= cfg.eps2 || std::fabs(hii - ghi[i]) >= cfg.eps2)
                at_limit = false;
        }
        if (lo < hi) {
            seen_feasible = true;
            out.entries.push_back({n, lo, hi});
            if (at_limit) {
                out.unbounded_tail = true;
                return out;
            }
        } else if (seen_feasible) {
            return out;
        }
    }
    throw std::runtime_error("solution_set: candidate scan exceeded max_candidates");
}

// ---------------------------------------------------------------------------
// Engine

NpEngine::NpEngine(std::vector<long long> y, NpSamplerConfig cfg)
    : y_(std::move(y)), cfg_(cfg) {
    if (y_.empty()) throw std::invalid_argument("NpEngine: counts must be nonempty");
    long long ymax = 0;
    std::map<long long, std::vector<int>> by_count;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        if (y_[i] < 0) throw std::invalid_argument("NpEngine: counts must be nonnegative");
        ymax = std::max(ymax, y_[i]);
        by_count[y_[i]].push_back(static_cast<int>(i));
    }
    if (!(cfg_.eps2 > 0.0)) throw std::invalid_argument("NpEngine: eps2 must be positive");
    first_n_ = std::max<long long>(ymax, 1);
    mono_n_ = std::max(10 * ymax, first_n_ + 1);
    for (auto& [cnt, members] : by_count) {
        Group g;
        g.y = cnt;
        g.members = std::move(members);
        groups_.push_back(std::move(g));
    }
    live_len_ = kInitialLive;
}

void NpEngine::refresh_extremes(Group& g) const {
    double lo = 1.0;
    double hi = 0.0;
    for (const int i : g.members) {
        lo = std::min(lo, u_[i]);
        hi = std::max(hi, u_[i]);
    }
    g.u_min = lo;
    g.u_max = hi;
    g.lo_inf = gamma_lo_limit(g.y, g.u_min);
    g.hi_inf = gamma_hi_limit(g.y, g.u_max);
}

double NpEngine::group_lo_at(const Group& g, long long n, double warm) const {
    double wp = warm;
    return obs_mu_lo(g.y, n, g.u_min, &wp);
}

double NpEngine::group_hi_at(const Group& g, long long n, double warm) const {
    double wp = warm;
    return obs_mu_hi(g.y, n, g.u_max, &wp);
}

void NpEngine::rebuild_group(Group& g) const {
    g.lo.assign(static_cast<std::size_t>(live_len_), 0.0);
    g.hi.assign(static_cast<std::size_t>(live_len_), 0.0);
    double warm_lo = -1.0;
    double warm_hi = -1.0;
    for (long long t = 0; t < live_len_; ++t) {
        const long long n = first_n_ + t;
        g.lo[static_cast<std::size_t>(t)] = obs_mu_lo(g.y, n, g.u_min, &warm_lo);
        g.hi[static_cast<std::size_t>(t)] = obs_mu_hi(g.y, n, g.u_max, &warm_hi);
    }
}

void NpEngine::rebuild_all() {
    for (auto& g : groups_) rebuild_group(g);
}

std::pair<double, double> NpEngine::rung_interval(long long t) const {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& g : groups_) {
        const long long n = first_n_ + t;
        if (g.y > n) return {1.0, 0.0};
        lo = std::max(lo, g.lo[static_cast<std::size_t>(t)]);
        hi = std::min(hi, g.hi[static_cast<std::size_t>(t)]);
    }
    return {lo, hi};
}

bool NpEngine::rung_feasible(long long t) const {
    const auto [lo, hi] = rung_interval(t);
    return lo < hi;
}

void NpEngine::classify() {
    for (;;) {
        long long t0 = -1;
        long long t1 = -1;
        for (long long t = 0; t < live_len_; ++t) {
            const bool f = rung_feasible(t);
            if (f && t0 < 0) t0 = t;
            if (!f && t0 >= 0) {
                t1 = t;
                break;
            }
        }
        if (t0 >= 0 && t1 >= 0) {
            n_min_ = first_n_ + t0;
            term_n_ = first_n_ + t1;
            unbounded_ = false;
            return;
        }
        const long long last_n = first_n_ + live_len_ - 1;
        if (t0 >= 0 && last_n >= mono_n_) {
            // Beyond the monotone threshold every group's lower endpoint
            // decreases and its upper endpoint stays above a computable
            // floor, so the tail is either provably all-feasible or, when
            // the limit intervals miss each other by more than the current
            // convergence gap, provably all-empty.
            double lb = 0.0;
            double hb = std::numeric_limits<double>::infinity();
            double lim_lo = 0.0;
            double lim_hi = std::numeric_limits<double>::infinity();
            double maxgap = 0.0;
            const std::size_t last = static_cast<std::size_t>(live_len_ - 1);
            for (const auto& g : groups_) {
                lb = std::max(lb, g.lo[last]);
                hb = std::min(hb, g.y == 0 ? g.hi[last] : g.hi_inf);
                lim_lo = std::max(lim_lo, g.lo_inf);
                lim_hi = std::min(lim_hi, g.hi_inf);
                if (g.y > 0) maxgap = std::max(maxgap, g.hi[last] - g.hi_inf);
            }
            if (lb < hb) {
                n_min_ = first_n_ + t0;
                term_n_ = -1;
                unbounded_ = true;
                return;
            }
            if (lim_hi <= lim_lo && maxgap < lim_lo - lim_hi) {
                n_min_ = first_n_ + t0;
                term_n_ = first_n_ + live_len_;
                unbounded_ = false;
                return;
            }
        }
        extend_live();
    }
}

void NpEngine::extend_live() {
    long long next = std::max(live_len_ + live_len_ / 2, live_len_ + 16);
    if (first_n_ + next - 1 < mono_n_) next = mono_n_ - first_n_ + 1;
    if (next > 4000000)
        throw std::runtime_error("NpEngine: ladder exceeded candidate cap");
    live_len_ = next;
    rebuild_all();
}

void NpEngine::set_u(std::vector<double> u) {
    if (u.size() != y_.size())
        throw std::invalid_argument("NpEngine::set_u: size mismatch");
    for (const double v : u)
        if (!(v > 0.0 && v < 1.0))
            throw std::invalid_argument("NpEngine::set_u: uniforms must lie inside (0, 1)");
    u_ = std::move(u);
    for (auto& g : groups_) refresh_extremes(g);
    rebuild_all();
    classify();
}

namespace {

// Admissible window in u for one observation with count yy at rung n, given
// the leave-out interval (lo_out, hi_out) on the mu scale.
Window member_window(long long yy, long long n, double lo_out, double hi_out) {
    Window w{0.0, 1.0};
    if (yy > 0) {
        const double x = std::min(hi_out / static_cast<double>(n), 1.0);
        w.lo = 1.0 - reg_inc_beta(static_cast<double>(yy),
                                  static_cast<double>(n - yy) + 1.0, std::max(x, 0.0));
    }
    if (yy >= n) {
        w.hi = (static_cast<double>(n) > lo_out) ? 1.0 : 0.0;
    } else {
        const double x = std::clamp(lo_out / static_cast<double>(n), 0.0, 1.0);
        w.hi = 1.0 - reg_inc_beta(static_cast<double>(yy) + 1.0,
                                  static_cast<double>(n - yy), x);
    }
    return w;
}

} // namespace

void NpEngine::gibbs_scan(Rng& rng) {
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        // Leave-out curves over the live segment and their tail bounds are
        // rebuilt on demand because the live length can grow mid-update.
        long long built_for = -1;
        std::vector<double> lo_out, hi_out;
        double hi_out_sup = std::numeric_limits<double>::infinity();
        double lim_lo_out = 0.0;
        double lim_hi_out = std::numeric_limits<double>::infinity();
        auto build_leave_out = [&]() {
            lo_out.assign(static_cast<std::size_t>(live_len_), 0.0);
            hi_out.assign(static_cast<std::size_t>(live_len_),
                          std::numeric_limits<double>::infinity());
            hi_out_sup = std::numeric_limits<double>::infinity();
            lim_lo_out = 0.0;
            lim_hi_out = std::numeric_limits<double>::infinity();
            const std::size_t last = static_cast<std::size_t>(live_len_ - 1);
            for (std::size_t go = 0; go < groups_.size(); ++go) {
                if (go == gi) continue;
                const auto& g = groups_[go];
                for (long long t = 0; t < live_len_; ++t) {
                    const auto ti = static_cast<std::size_t>(t);
                    lo_out[ti] = std::max(lo_out[ti], g.lo[ti]);
                    hi_out[ti] = std::min(hi_out[ti], g.hi[ti]);
                }
                lim_lo_out = std::max(lim_lo_out, g.lo_inf);
                lim_hi_out = std::min(lim_hi_out, g.hi_inf);
                hi_out_sup = std::min(hi_out_sup, g.y == 0 ? g.hi_inf : g.hi[last]);
            }
        };
        build_leave_out();

        const auto& grp = groups_[gi];
        const long long yy = grp.y;

        auto build_windows = [&]() {
            std::vector<Window> ws;
            for (long long t = 0; t < live_len_; ++t) {
                const auto ti = static_cast<std::size_t>(t);
                if (!(lo_out[ti] < hi_out[ti])) continue;
                const Window w = member_window(yy, first_n_ + t, lo_out[ti], hi_out[ti]);
                if (w.lo < w.hi) ws.push_back(w);
            }
            // Tail cover: a provable superset of the admissible set over all
            // rungs past the live segment, using the monotone envelopes of
            // both sides. Only added when the leave-out tail can be
            // nonempty at all.
            const long long last_n = first_n_ + live_len_ - 1;
            if (last_n >= mono_n_ && lim_lo_out < hi_out_sup) {
                Window w{0.0, 1.0};
                if (yy > 0) {
                    w.lo = std::isfinite(hi_out_sup)
                               ? 1.0 - reg_inc_gamma(static_cast<double>(yy), hi_out_sup)
                               : 0.0;
                }
                const double seg = 1.0 - reg_inc_beta(static_cast<double>(yy) + 1.0,
                                                      static_cast<double>(last_n - yy),
                                                      std::clamp(lim_lo_out / last_n, 0.0, 1.0));
                const double lim = 1.0 - reg_inc_gamma(static_cast<double>(yy) + 1.0, lim_lo_out);
                w.hi = std::max(seg, lim);
                if (w.lo < w.hi) ws.push_back(w);
            }
            return merge_windows(std::move(ws));
        };

        // Joint feasibility of the whole configuration with the group's
        // extremes replaced; sound in both directions, extending the live
        // segment until the tail can be decided.
        auto feasible_with = [&](double cu_min, double cu_max) {
            for (;;) {
                double warm_lo = -1.0;
                double warm_hi = -1.0;
                double clo_last = 0.0;
                double chi_last = 0.0;
                for (long long t = 0; t < live_len_; ++t) {
                    const auto ti = static_cast<std::size_t>(t);
                    const long long n = first_n_ + t;
                    double clo;
                    double chi;
                    if (yy > n) {
                        clo = 1.0;
                        chi = 0.0;
                    } else {
                        clo = obs_mu_lo(yy, n, cu_min, &warm_lo);
                        chi = obs_mu_hi(yy, n, cu_max, &warm_hi);
                    }
                    clo_last = clo;
                    chi_last = chi;
                    if (std::max(clo, lo_out[ti]) < std::min(chi, hi_out[ti])) return true;
                }
                const long long last_n = first_n_ + live_len_ - 1;
                const double clim_lo = gamma_lo_limit(yy, cu_min);
                const double clim_hi = gamma_hi_limit(yy, cu_max);
                if (last_n >= mono_n_) {
                    const std::size_t last = static_cast<std::size_t>(live_len_ - 1);
                    const double lb = std::max(lo_out[last], clo_last);
                    double hb_out = std::numeric_limits<double>::infinity();
                    for (std::size_t go = 0; go < groups_.size(); ++go) {
                        if (go == gi) continue;
                        const auto& g = groups_[go];
                        hb_out = std::min(hb_out, g.y == 0 ? g.hi[last] : g.hi_inf);
                    }
                    const double hb = std::min(hb_out, yy == 0 ? chi_last : clim_hi);
                    if (lb < hb) return true;
                    double lim_lo = std::max(lim_lo_out, clim_lo);
                    double lim_hi = std::min(lim_hi_out, clim_hi);
                    double maxgap = yy == 0 ? 0.0 : std::max(0.0, chi_last - clim_hi);
                    for (std::size_t go = 0; go < groups_.size(); ++go) {
                        if (go == gi) continue;
                        const auto& g = groups_[go];
                        if (g.y > 0) maxgap = std::max(maxgap, g.hi[last] - g.hi_inf);
                    }
                    if (lim_hi <= lim_lo && maxgap < lim_lo - lim_hi) return false;
                }
                extend_live();
                build_leave_out();
            }
        };

        auto commit_group = [&](Group& g) {
            refresh_extremes(g);
            rebuild_group(g);
            classify();
        };

        bool done = false;
        {
            std::vector<Window> ws = build_windows();
            double total = windows_total(ws);
            if (!ws.empty() && total > 0.0) {
                std::vector<double> cand(grp.members.size());
                for (int attempt = 0; attempt < kBatchRejectCap && !done; ++attempt) {
                    const long long live_before = live_len_;
                    double cmin = 1.0;
                    double cmax = 0.0;
                    for (auto& c : cand) {
                        c = draw_from_windows(ws, total, rng);
                        cmin = std::min(cmin, c);
                        cmax = std::max(cmax, c);
                    }
                    if (feasible_with(cmin, cmax)) {
                        auto& g = groups_[gi];
                        for (std::size_t k = 0; k < g.members.size(); ++k)
                            u_[g.members[k]] = cand[k];
                        commit_group(g);
                        done = true;
                    } else if (live_len_ != live_before) {
                        ws = build_windows();
                        total = windows_total(ws);
                        if (ws.empty() || !(total > 0.0)) break;
                    }
                }
            }
        }

        if (!done) {
            // Exact per-member fallback: each observation in turn is drawn
            // from its own admissible union given everyone else, including
            // its group mates.
            ++gibbs_fallbacks_;
            auto& g = groups_[gi];
            for (const int mi : g.members) {
                double red_min = 2.0;
                double red_max = -1.0;
                for (const int mj : g.members) {
                    if (mj == mi) continue;
                    red_min = std::min(red_min, u_[mj]);
                    red_max = std::max(red_max, u_[mj]);
                }
                const bool has_mates = red_max >= 0.0;

                // Combined leave-out = other groups plus the mates.
                std::vector<Window> ws;
                double mate_warm_lo = -1.0;
                double mate_warm_hi = -1.0;
                double comb_lim_lo = lim_lo_out;
                double comb_lim_hi = lim_hi_out;
                double comb_hi_sup = hi_out_sup;
                double mate_hi_last = std::numeric_limits<double>::infinity();
                for (long long t = 0; t < live_len_; ++t) {
                    const auto ti = static_cast<std::size_t>(t);
                    const long long n = first_n_ + t;
                    double lo2 = lo_out[ti];
                    double hi2 = hi_out[ti];
                    if (has_mates && yy <= n) {
                        lo2 = std::max(lo2, obs_mu_lo(yy, n, red_min, &mate_warm_lo));
                        mate_hi_last = obs_mu_hi(yy, n, red_max, &mate_warm_hi);
                        hi2 = std::min(hi2, mate_hi_last);
                    }
                    if (!(lo2 < hi2)) continue;
                    const Window w = member_window(yy, n, lo2, hi2);
                    if (w.lo < w.hi) ws.push_back(w);
                }
                if (has_mates) {
                    comb_lim_lo = std::max(comb_lim_lo, gamma_lo_limit(yy, red_min));
                    comb_lim_hi = std::min(comb_lim_hi, gamma_hi_limit(yy, red_max));
                    comb_hi_sup = std::min(comb_hi_sup,
                                           yy == 0 ? gamma_hi_limit(yy, red_max) : mate_hi_last);
                }
                const long long last_n = first_n_ + live_len_ - 1;
                if (last_n >= mono_n_ && comb_lim_lo < comb_hi_sup) {
                    Window w{0.0, 1.0};
                    if (yy > 0) {
                        w.lo = std::isfinite(comb_hi_sup)
                                   ? 1.0 - reg_inc_gamma(static_cast<double>(yy), comb_hi_sup)
                                   : 0.0;
                    }
                    const double seg = 1.0 - reg_inc_beta(static_cast<double>(yy) + 1.0,
                                                          static_cast<double>(last_n - yy),
                                                          std::clamp(comb_lim_lo / last_n, 0.0, 1.0));
                    const double lim = 1.0 - reg_inc_gamma(static_cast<double>(yy) + 1.0,
                                                           comb_lim_lo);
                    w.hi = std::max(seg, lim);
                    if (w.lo < w.hi) ws.push_back(w);
                }
                ws = merge_windows(std::move(ws));
                const double total = windows_total(ws);
                if (ws.empty() || !(total > 0.0))
                    throw std::runtime_error("NpEngine: empty conditional window");

                bool member_done = false;
                for (int attempt = 0; attempt < kMemberRejectCap; ++attempt) {
                    const double c = draw_from_windows(ws, total, rng);
                    double cmin = c;
                    double cmax = c;
                    if (has_mates) {
                        cmin = std::min(cmin, red_min);
                        cmax = std::max(cmax, red_max);
                    }
                    if (feasible_with(cmin, cmax)) {
                        u_[mi] = c;
                        member_done = true;
                        break;
                    }
                }
                if (!member_done)
                    throw std::runtime_error("NpEngine: conditional update failed");
                commit_group(g);
                build_leave_out();
            }
        }
    }
}

bool NpEngine::mh_step_mu(Rng& rng) {
    const long long a = n_min_;
    const auto [ia_lo, ia_hi] = rung_interval(a - first_n_);
    if (!(ia_lo < ia_hi)) throw std::logic_error("NpEngine: anchor rung empty");
    const double mu_star = rng.uniform(ia_lo, ia_hi);
    const double sd = cfg_.mu_proposal_sd > 0.0
                          ? cfg_.mu_proposal_sd
                          : 0.5 * std::sqrt(std::max(
                                1.0, std::accumulate(y_.begin(), y_.end(), 0.0) /
                                         static_cast<double>(y_.size())));
    const double mu_prop = mu_star + sd * rng.normal();
    if (!(mu_prop > 0.0) || !(mu_prop < static_cast<double>(a))) return false;
    const double p_prop = mu_prop / static_cast<double>(a);

    // Forward construction: place every observation's box at the anchor
    // rung around the proposed mu.
    std::vector<double> u_prop(y_.size());
    double log_w_fwd = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const double flo = binom_cdf(a, p_prop, y_[i] - 1);
        const double fhi = binom_cdf(a, p_prop, y_[i]);
        if (!(fhi > flo)) return false;
        u_prop[i] = rng.uniform(flo, fhi);
        log_w_fwd += std::log(fhi - flo);
    }

    // Grouped extremes of the proposal.
    std::vector<ExtGroup> gs(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        gs[g].y = groups_[g].y;
        double lo = 1.0;
        double hi = 0.0;
        for (const int i : groups_[g].members) {
            lo = std::min(lo, u_prop[i]);
            hi = std::max(hi, u_prop[i]);
        }
        gs[g].u_min = lo;
        gs[g].u_max = hi;
    }
    const long long b = probe_n_min(gs, first_n_, a);
    if (b < 0) return false;
    const auto [ib_lo, ib_hi] = probe_rung(gs, b, nullptr, nullptr);
    if (!(ib_lo < ib_hi)) return false;

    // Reverse-move requirements: the proposed mu must sit inside the
    // proposal's anchor interval and the drawn mu inside the current
    // configuration's interval at that anchor.
    if (!(mu_prop > ib_lo && mu_prop <= ib_hi)) return false;
    const long long tb = b - first_n_;
    if (tb >= live_len_) return false;
    const auto [cb_lo, cb_hi] = rung_interval(tb);
    if (!(cb_lo < cb_hi) || !(mu_star > cb_lo && mu_star <= cb_hi)) return false;
    const double p_star = mu_star / static_cast<double>(b);
    if (!(p_star > 0.0 && p_star < 1.0)) return false;

    double log_w_rev = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const double lw = log_box_width(y_[i], b, p_star);
        if (!std::isfinite(lw)) return false;
        log_w_rev += lw;
    }

    const double log_ratio = std::log(ia_hi - ia_lo) + log_w_fwd -
                             std::log(ib_hi - ib_lo) - log_w_rev;
    if (std::log(rng.uniform()) > log_ratio) return false;

    u_ = std::move(u_prop);
    for (auto& g : groups_) refresh_extremes(g);
    rebuild_all();
    classify();
    return true;
}

bool NpEngine::mh_step_n(Rng& rng) {
    const long long a = n_min_;
    const auto [ia_lo, ia_hi] = rung_interval(a - first_n_);
    if (!(ia_lo < ia_hi)) throw std::logic_error("NpEngine: anchor rung empty");
    const double mu_star = rng.uniform(ia_lo, ia_hi);
    const long long n_prop = a + (rng.uniform() <= 0.5 ? 1 : -1);
    if (n_prop < first_n_) return false;
    if (!(mu_star < static_cast<double>(n_prop))) return false;
    const double p_prop = mu_star / static_cast<double>(n_prop);

    std::vector<double> u_prop(y_.size());
    double log_w_fwd = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const double flo = binom_cdf(n_prop, p_prop, y_[i] - 1);
        const double fhi = binom_cdf(n_prop, p_prop, y_[i]);
        if (!(fhi > flo)) return false;
        u_prop[i] = rng.uniform(flo, fhi);
        log_w_fwd += std::log(fhi - flo);
    }

    std::vector<ExtGroup> gs(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        gs[g].y = groups_[g].y;
        double lo = 1.0;
        double hi = 0.0;
        for (const int i : groups_[g].members) {
            lo = std::min(lo, u_prop[i]);
            hi = std::max(hi, u_prop[i]);
        }
        gs[g].u_min = lo;
        gs[g].u_max = hi;
    }
    const long long b = probe_n_min(gs, first_n_, n_prop);
    if (b < 0) return false;
    if (std::llabs(b - a) != 1) return false;

    // Reverse move: from the proposal's anchor b, the coin must target the
    // current anchor a and redraw mu_star from the proposal's interval.
    const auto [ib_lo, ib_hi] = probe_rung(gs, b, nullptr, nullptr);
    if (!(ib_lo < ib_hi)) return false;
    if (!(mu_star > ib_lo && mu_star <= ib_hi)) return false;
    const double p_rev = mu_star / static_cast<double>(a);
    if (!(p_rev > 0.0 && p_rev < 1.0)) return false;
    double log_w_rev = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const double lw = log_box_width(y_[i], a, p_rev);
        if (!std::isfinite(lw)) return false;
        log_w_rev += lw;
    }

    const double log_ratio = std::log(ia_hi - ia_lo) + log_w_fwd -
                             std::log(ib_hi - ib_lo) - log_w_rev;
    if (std::log(rng.uniform()) > log_ratio) return false;

    u_ = std::move(u_prop);
    for (auto& g : groups_) refresh_extremes(g);
    rebuild_all();
    classify();
    return true;
}

long long NpEngine::gamma_cut() const {
    // Smallest rung in the monotone regime where every observation's
    // interval is within eps2 of its gamma limit.
    const std::size_t m = y_.size();
    std::vector<double> glo(m), ghi(m);
    for (std::size_t i = 0; i < m; ++i) {
        glo[i] = gamma_lo_limit(y_[i], u_[i]);
        ghi[i] = gamma_hi_limit(y_[i], u_[i]);
    }
    auto ok = [&](long long n) {
        for (std::size_t i = 0; i < m; ++i) {
            double warm = glo[i] / static_cast<double>(n);
            if (std::fabs(obs_mu_lo(y_[i], n, u_[i], &warm) - glo[i]) >= cfg_.eps2) return false;
            warm = ghi[i] / static_cast<double>(n);
            if (std::fabs(obs_mu_hi(y_[i], n, u_[i], &warm) - ghi[i]) >= cfg_.eps2) return false;
        }
        return true;
    };
    long long lo = std::max(mono_n_, n_min_);
    if (ok(lo)) return lo;
    long long hi = lo * 2;
    while (!ok(hi)) {
        lo = hi;
        hi *= 2;
        if (hi > (1LL << 40))
            throw std::runtime_error("NpEngine: gamma cut search diverged");
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (ok(mid)) hi = mid; else lo = mid;
    }
    return hi;
}

NpDrawSummary NpEngine::summarize(Rng& rng) const {
    NpDrawSummary s;
    s.n_min = n_min_;
    const auto [lo0, hi0] = rung_interval(n_min_ - first_n_);
    s.mu_lo_at_min = lo0;
    s.mu_hi_at_min = hi0;
    s.unbounded = unbounded_;

    const long long seg_last = unbounded_ ? first_n_ + live_len_ - 1 : term_n_ - 1;
    double mu_min = std::numeric_limits<double>::infinity();
    double mu_max = -std::numeric_limits<double>::infinity();
    s.segment.reserve(static_cast<std::size_t>(seg_last - n_min_ + 1));
    for (long long n = n_min_; n <= seg_last; ++n) {
        const auto [lo, hi] = rung_interval(n - first_n_);
        if (!(lo < hi)) break;
        s.segment.push_back({n, lo, hi});
        mu_min = std::min(mu_min, lo);
        mu_max = std::max(mu_max, hi);
    }

    if (unbounded_) {
        double lim_lo = 0.0;
        double lim_hi = std::numeric_limits<double>::infinity();
        double tail_sup = std::numeric_limits<double>::infinity();
        const std::size_t last = static_cast<std::size_t>(live_len_ - 1);
        for (const auto& g : groups_) {
            lim_lo = std::max(lim_lo, g.lo_inf);
            lim_hi = std::min(lim_hi, g.hi_inf);
            tail_sup = std::min(tail_sup, g.y == 0 ? g.hi_inf : g.hi[last]);
        }
        s.tail_mu_lo = lim_lo;
        s.tail_mu_hi = lim_hi;
        mu_min = std::min(mu_min, lim_lo);
        mu_max = std::max(mu_max, tail_sup);
        s.n_last = gamma_cut();
    } else {
        s.n_last = term_n_ - 1;
        s.tail_mu_lo = 0.0;
        s.tail_mu_hi = 0.0;
    }
    s.mu_min = mu_min;
    s.mu_max = mu_max;

    // Representative point: min or max rung by a fair coin, then the low or
    // high end of that rung's interval by another.
    const bool pick_max = rng.uniform() <= 0.5;
    const bool pick_hi = rng.uniform() <= 0.5;
    if (pick_max) {
        s.rep_n = s.n_last;
        s.rep_censored = unbounded_;
        if (unbounded_) {
            s.rep_mu = pick_hi ? s.tail_mu_hi : s.tail_mu_lo;
        } else {
            const auto& e = s.segment.back();
            s.rep_mu = pick_hi ? e.mu_hi : e.mu_lo;
        }
    } else {
        s.rep_n = s.n_min;
        s.rep_mu = pick_hi ? hi0 : lo0;
    }
    return s;
}

NpSolutionSet NpEngine::materialize() const {
    NpSolveConfig sc;
    sc.eps2 = cfg_.eps2;
    return solution_set(u_, y_, sc);
}

// ---------------------------------------------------------------------------
// Free functions

NpState init_state(const std::vector<long long>& y, const NpSamplerConfig& cfg, Rng& rng) {
    (void)cfg;
    (void)rng;
    if (y.empty()) throw std::invalid_argument("init_state: counts must be nonempty");
    long long ymax = 0;
    double mean = 0.0;
    for (const long long yi : y) {
        if (yi < 0) throw std::invalid_argument("init_state: counts must be nonnegative");
        ymax = std::max(ymax, yi);
        mean += static_cast<double>(yi);
    }
    if (ymax == 0)
        throw std::runtime_error("init_state: trial count unidentifiable for all-zero counts");
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (const long long yi : y) var += (yi - mean) * (yi - mean);
    var = y.size() > 1 ? var / static_cast<double>(y.size() - 1) : 0.0;

    long long n_hat;
    if (var > 0.0 && mean > var) {
        n_hat = std::llround(mean * mean / (mean - var));
    } else if (var == 0.0) {
        n_hat = 2 * ymax;   // all counts equal
    } else {
        n_hat = 2 * ymax;   // overdispersed: moments disagree
    }
    n_hat = std::clamp(n_hat, std::max(ymax, 1LL), 10 * std::max(ymax, 1LL));
    double p_hat = mean / static_cast<double>(n_hat);
    p_hat = std::clamp(p_hat, 1e-9, 1.0 - 1e-9);

    NpState st;
    st.u.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double flo = binom_cdf(n_hat, p_hat, y[i] - 1);
        const double fhi = binom_cdf(n_hat, p_hat, y[i]);
        st.u[i] = std::clamp(0.5 * (flo + fhi), 1e-12, 1.0 - 1e-12);
    }
    return st;
}

void gibbs_scan(NpState& state, const std::vector<long long>& y,
                const NpSamplerConfig& cfg, Rng& rng) {
    NpEngine eng(y, cfg);
    eng.set_u(state.u);
    eng.gibbs_scan(rng);
    state.u = eng.u();
}

bool mh_step_mu(NpState& state, const std::vector<long long>& y,
                const NpSamplerConfig& cfg, Rng& rng) {
    NpEngine eng(y, cfg);
    eng.set_u(state.u);
    const bool acc = eng.mh_step_mu(rng);
    state.u = eng.u();
    return acc;
}

bool mh_step_n(NpState& state, const std::vector<long long>& y,
               const NpSamplerConfig& cfg, Rng& rng) {
    NpEngine eng(y, cfg);
    eng.set_u(state.u);
    const bool acc = eng.mh_step_n(rng);
    state.u = eng.u();
    return acc;
}

namespace {

template <typename Record>
void run_loop(const std::vector<long long>& y, const NpSamplerConfig& cfg,
              double& mu_acc, double& n_acc, long long& fallbacks, Record record) {
    if (cfg.iterations <= cfg.burn_in || cfg.burn_in < 0)
        throw std::invalid_argument("run_np_sampler: iterations must exceed burn_in");
    if (cfg.thin < 1) throw std::invalid_argument("run_np_sampler: thin must be >= 1");
    Rng rng(cfg.seed);
    NpState st = init_state(y, cfg, rng);
    NpEngine eng(y, cfg);
    eng.set_u(st.u);
    long long mu_accepts = 0;
    long long n_accepts = 0;
    for (int it = 0; it < cfg.iterations; ++it) {
        eng.gibbs_scan(rng);
        if (eng.mh_step_mu(rng)) ++mu_accepts;
        if (eng.mh_step_n(rng)) ++n_accepts;
        if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) record(eng, rng);
    }
    mu_acc = static_cast<double>(mu_accepts) / cfg.iterations;
    n_acc = static_cast<double>(n_accepts) / cfg.iterations;
    fallbacks = eng.gibbs_fallbacks();
}

} // namespace

NpRun run_np_sampler(const std::vector<long long>& y, const NpSamplerConfig& cfg) {
    NpRun run;
    run_loop(y, cfg, run.mu_acceptance, run.n_acceptance, run.gibbs_fallbacks,
             [&](const NpEngine& eng, Rng&) { run.sets.push_back(eng.materialize()); });
    return run;
}

NpSummaryRun run_np_summaries(const std::vector<long long>& y, const NpSamplerConfig& cfg) {
    NpSummaryRun run;
    run_loop(y, cfg, run.mu_acceptance, run.n_acceptance, run.gibbs_fallbacks,
             [&](const NpEngine& eng, Rng& rng) { run.draws.push_back(eng.summarize(rng)); });
    return run;
}

} // namespace gfi
