#include "entryexit/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "entryexit/errors.hpp"
#include "entryexit/policy.hpp"
#include "entryexit/rng.hpp"
#include "entryexit/transform.hpp"

#if defined(ENTRYEXIT_HAVE_MVEC)
#include <immintrin.h>
extern "C" {
__m256d _ZGVdN4v_exp(__m256d);
__m256d _ZGVdN4v_log(__m256d);
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
}
#endif

namespace entryexit {

namespace {

constexpr int kBlock = 2048;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Batched math kernels. The vector path uses glibc's libmvec when the host
// has AVX2; the scalar path is the portable fallback. Either way the run is
// deterministic for a fixed seed on a fixed build/host.
// ---------------------------------------------------------------------------

void exp_block_scalar(const double* x, double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

// Fills z[0..n) with standard normals from n raw 64-bit words, Box-Muller
// pairs in consumption order. n must be even.
void normals_scalar(const uint64_t* raw, double* z, int n) {
    for (int t = 0; t < n / 2; ++t) {
        const double u1 = Philox4x32::to_unit(raw[2 * t]);
        const double u2 = Philox4x32::to_unit(raw[2 * t + 1]);
        const double m = std::sqrt(-2.0 * std::log(u1));
        const double a = kTwoPi * u2;
        z[2 * t] = m * std::cos(a);
        z[2 * t + 1] = m * std::sin(a);
    }
}

#if defined(ENTRYEXIT_HAVE_MVEC)
__attribute__((target("avx2"))) void exp_block_avx2(const double* x, double* out,
                                                    int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _ZGVdN4v_exp(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = std::exp(x[i]);
}

__attribute__((target("avx2"))) void normals_avx2(const uint64_t* raw, double* z,
                                                  int n) {
    alignas(32) double u1[4], u2[4];
    int t = 0;
    const int pairs = n / 2;
    for (; t + 4 <= pairs; t += 4) {
        for (int i = 0; i < 4; ++i) {
            u1[i] = Philox4x32::to_unit(raw[2 * (t + i)]);
            u2[i] = Philox4x32::to_unit(raw[2 * (t + i) + 1]);
        }
        const __m256d lu = _ZGVdN4v_log(_mm256_load_pd(u1));
        const __m256d m = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), lu));
        const __m256d a =
            _mm256_mul_pd(_mm256_set1_pd(kTwoPi), _mm256_load_pd(u2));
        alignas(32) double mc[4], ms[4], mm[4];
        _mm256_store_pd(mc, _ZGVdN4v_cos(a));
        _mm256_store_pd(ms, _ZGVdN4v_sin(a));
        _mm256_store_pd(mm, m);
        for (int i = 0; i < 4; ++i) {
            z[2 * (t + i)] = mm[i] * mc[i];
            z[2 * (t + i) + 1] = mm[i] * ms[i];
        }
    }
    if (2 * t < n) normals_scalar(raw + 2 * t, z + 2 * t, n - 2 * t);
}

bool host_has_avx2() { return __builtin_cpu_supports("avx2"); }
#endif

void (*exp_block)(const double*, double*, int) = exp_block_scalar;
void (*normals_block)(const uint64_t*, double*, int) = normals_scalar;

struct KernelInit {
    KernelInit() {
#if defined(ENTRYEXIT_HAVE_MVEC)
        if (host_has_avx2()) {
            exp_block = exp_block_avx2;
            normals_block = normals_avx2;
        }
#endif
    }
};
const KernelInit kernel_init;

// ---------------------------------------------------------------------------
// Rule machines
// ---------------------------------------------------------------------------

struct RuleSpec {
    EntryRule::Kind entry_kind;
    double lo_x = 0.0, hi_x = 0.0;  // entry thresholds vs X = ln(P/p0)
    ExitRule::Kind exit_kind;
    double exit_x = 0.0;
};

struct MachineState {
    int64_t entry_step = -1;
    int64_t exit_step = -1;
    double entry_x = 0.0;
    double exit_xv = 0.0;
    double flows = 0.0;
    double prev_term = 0.0;
    double costs = 0.0;
    double inst_flows = 0.0;
    double inst_prev = 0.0;
    double inst_lumps = 0.0;
    bool done = false;
};

struct EngineSetup {
    ProjectParams params;
    std::vector<RuleSpec> specs;
    int64_t n_steps = 0;
    int64_t delay_steps = 0;
    double dt = 0.0;
    std::vector<double> disc;  // e^{-r k dt}, k = 0..n_steps
    double k1 = 0, k0 = 0, l1 = 0, l0 = 0;
};

RuleSpec make_spec(const EntryRule& entry, const ExitRule& exit, double p0) {
    RuleSpec s;
    s.entry_kind = entry.kind;
    s.exit_kind = exit.kind;
    switch (entry.kind) {
        case EntryRule::Kind::Never:
        case EntryRule::Kind::Immediately:
            break;
        case EntryRule::Kind::HitAbove:
            if (!(entry.upper > 0.0))
                throw ConfigError("entry rule: HitAbove needs a positive trigger");
            s.hi_x = std::log(entry.upper / p0);
            break;
        case EntryRule::Kind::HitOutsideBand:
            if (!(entry.lower > 0.0) || !(entry.upper > entry.lower))
                throw ConfigError("entry rule: band needs 0 < lower < upper");
            s.lo_x = std::log(entry.lower / p0);
            s.hi_x = std::log(entry.upper / p0);
            break;
    }
    if (exit.kind == ExitRule::Kind::FirstBelowAfterEntry) {
        if (!(exit.threshold > 0.0))
            throw ConfigError("exit rule: threshold must be positive");
        s.exit_x = std::log(exit.threshold / p0);
    }
    return s;
}

EngineSetup make_setup(const ProjectParams& raw,
                       const std::vector<std::pair<EntryRule, ExitRule>>& rules,
                       const McConfig& cfg) {
    const ProjectParams params = validate(raw);
    if (!(params.r > params.mu))
        throw PreconditionError("simulation requires r > mu (finite value)");
    if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(cfg.t_max >= cfg.dt)) throw ConfigError("t_max must be >= dt");
    if (cfg.antithetic && (cfg.n_paths % 2) != 0)
        throw ConfigError("antithetic sampling needs an even path count");

    EngineSetup su;
    su.params = params;
    su.dt = cfg.dt;
    su.n_steps = static_cast<int64_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
    su.delay_steps = std::llround(params.delta / cfg.dt);
    su.disc.resize(static_cast<size_t>(su.n_steps) + 1);
    for (int64_t k = 0; k <= su.n_steps; ++k)
        su.disc[static_cast<size_t>(k)] = std::exp(-params.r * cfg.dt * double(k));
    const TransformCoeffs tc = transform_coeffs(params);
    su.k1 = tc.k1;
    su.k0 = tc.k0;
    su.l1 = tc.l1;
    su.l0 = tc.l0;
    su.specs.reserve(rules.size());
    for (const auto& [er, xr] : rules) su.specs.push_back(make_spec(er, xr, params.p0));
    return su;
}

inline bool entry_hit(const RuleSpec& s, double x, int64_t k) {
    switch (s.entry_kind) {
        case EntryRule::Kind::Never: return false;
        case EntryRule::Kind::Immediately: return k == 0;
        case EntryRule::Kind::HitAbove: return x >= s.hi_x;
        case EntryRule::Kind::HitOutsideBand: return x <= s.lo_x || x >= s.hi_x;
    }
    return false;
}

// Decision transitions for one machine over a block of steps
// [k0+1, k0+bp]; X holds the block's log-price values.
void decision_scan(const RuleSpec& s, MachineState& m, const double* X, int64_t k0,
                   int bp) {
    if (m.done) return;
    int j = 0;
    if (m.entry_step < 0) {
        if (s.entry_kind == EntryRule::Kind::Never ||
            s.entry_kind == EntryRule::Kind::Immediately) {
            // Immediately resolves at step 0; Never stays out forever.
            j = bp;
        }
        for (; j < bp; ++j) {
            const double x = X[j];
            if (entry_hit(s, x, k0 + 1 + j)) {
                m.entry_step = k0 + 1 + j;
                m.entry_x = x;
                if (s.exit_kind == ExitRule::Kind::FirstBelowAfterEntry &&
                    x <= s.exit_x) {
                    m.exit_step = m.entry_step;  // already in the exit set
                    m.exit_xv = x;
                }
                ++j;
                break;
            }
        }
    }
    if (m.entry_step >= 0 && m.exit_step < 0 &&
        s.exit_kind == ExitRule::Kind::FirstBelowAfterEntry) {
        const int start = static_cast<int>(
            std::max<int64_t>(m.entry_step + 1 - (k0 + 1), int64_t(j)));
        for (int i = start; i < bp; ++i) {
            if (X[i] <= s.exit_x) {
                m.exit_step = k0 + 1 + i;
                m.exit_xv = X[i];
                break;
            }
        }
    }
}

// Cash-flow accrual for one machine over a block. E holds p-relative price
// factors e^{X}; only consulted inside accrual windows. When WithInstant is
// set the transformed instant payoff accrues on the undelayed window from
// the same path.
template <bool WithInstant>
void accrual_scan(const EngineSetup& su, const RuleSpec& s, MachineState& m,
                  const double* E, int64_t k0, int bp) {
    if (m.done || m.entry_step < 0) return;
    const int64_t N = su.n_steps;
    const int64_t mlag = su.delay_steps;
    const double p0 = su.params.p0;
    const double C = su.params.C;
    const double dt = su.dt;
    const bool exits = s.exit_kind == ExitRule::Kind::FirstBelowAfterEntry;

    const int64_t ws = m.entry_step + mlag;
    const int64_t we = exits ? (m.exit_step >= 0
                                    ? m.exit_step + mlag
                                    : std::numeric_limits<int64_t>::max())
                             : N;
    const int64_t lo = std::max<int64_t>(ws, k0 + 1);
    const int64_t hi = std::min<int64_t>({we, k0 + bp, N});
    for (int64_t k = lo; k <= hi; ++k) {
        const double term =
            su.disc[static_cast<size_t>(k)] * (p0 * E[k - (k0 + 1)] - C);
        if (k > ws) m.flows += 0.5 * dt * (m.prev_term + term);
        m.prev_term = term;
    }
    // lump costs charged when their (delayed) instants fall in this block
    if (ws >= k0 + 1 && ws <= std::min<int64_t>(k0 + bp, N))
        m.costs += su.disc[static_cast<size_t>(ws)] * su.params.K_I;
    if (exits && m.exit_step >= 0) {
        if (we >= k0 + 1 && we <= std::min<int64_t>(k0 + bp, N))
            m.costs += su.disc[static_cast<size_t>(we)] * su.params.K_O;
        if (we <= k0 + bp) m.done = true;
    }

    if constexpr (WithInstant) {
        const int64_t iws = m.entry_step;
        const int64_t iwe =
            exits ? (m.exit_step >= 0 ? m.exit_step
                                      : std::numeric_limits<int64_t>::max())
                  : N;
        const int64_t ilo = std::max<int64_t>(iws, k0 + 1);
        const int64_t ihi = std::min<int64_t>({iwe, k0 + bp, N});
        for (int64_t k = ilo; k <= ihi; ++k) {
            const double term =
                su.disc[static_cast<size_t>(k)] * (p0 * E[k - (k0 + 1)] - C);
            if (k > iws) m.inst_flows += 0.5 * dt * (m.inst_prev + term);
            m.inst_prev = term;
        }
        if (iws >= k0 + 1 && iws <= k0 + bp) {
            const double px = p0 * std::exp(m.entry_x);
            m.inst_lumps +=
                su.disc[static_cast<size_t>(iws)] * (su.k1 * px + su.k0);
        }
        if (exits && m.exit_step >= 0 && m.exit_step >= k0 + 1 &&
            m.exit_step <= k0 + bp) {
            const double px = p0 * std::exp(m.exit_xv);
            m.inst_lumps +=
                su.disc[static_cast<size_t>(m.exit_step)] * (su.l1 * px + su.l0);
        }
    }
}

// Step-0 handling: decisions and possible window starts at t = 0 (X = 0,
// price p0, discount 1).
template <bool WithInstant>
void init_step0(const EngineSetup& su, const RuleSpec& s, MachineState& m) {
    if (s.entry_kind == EntryRule::Kind::Never) {
        m.done = true;
        return;
    }
    if (entry_hit(s, 0.0, 0)) {
        m.entry_step = 0;
        m.entry_x = 0.0;
        if (s.exit_kind == ExitRule::Kind::FirstBelowAfterEntry && 0.0 <= s.exit_x) {
            m.exit_step = 0;
            m.exit_xv = 0.0;
        }
    }
    if (m.entry_step == 0) {
        const double term0 = su.params.p0 - su.params.C;
        if (su.delay_steps == 0) {
            m.prev_term = term0;
            m.costs += su.params.K_I;
            if (m.exit_step == 0) {
                m.costs += su.params.K_O;
                m.done = true;
            }
        } else if (m.exit_step == 0 && su.delay_steps > su.n_steps) {
            m.done = true;  // both lumps fall beyond the horizon
        }
        if constexpr (WithInstant) {
            m.inst_prev = term0;
            m.inst_lumps += su.k1 * su.params.p0 + su.k0;
            if (m.exit_step == 0)
                m.inst_lumps += su.l1 * su.params.p0 + su.l0;
        }
    }
}

struct PathResult {
    double delayed = 0.0;
    double instant = 0.0;
    bool overflow = false;
};

template <bool WithInstant>
void run_path(const EngineSetup& su, uint64_t seed, int64_t path,
              bool antithetic, std::vector<MachineState>& machines,
              std::vector<PathResult>& out) {
    const uint64_t stream = antithetic ? uint64_t(path / 2) : uint64_t(path);
    const bool negate = antithetic && (path & 1);
    Philox4x32 rng(seed, stream);

    const double drift =
        (su.params.mu - 0.5 * su.params.sigma * su.params.sigma) * su.dt;
    const double vol = su.params.sigma * std::sqrt(su.dt);

    const size_t nr = su.specs.size();
    machines.assign(nr, MachineState{});
    for (size_t i = 0; i < nr; ++i)
        init_step0<WithInstant>(su, su.specs[i], machines[i]);

    alignas(64) static thread_local uint64_t raw[kBlock];
    alignas(64) static thread_local double z[kBlock];
    alignas(64) static thread_local double X[kBlock];
    alignas(64) static thread_local double E[kBlock];

    bool overflow = false;
    double xlast = 0.0;
    int64_t k0 = 0;
    while (k0 < su.n_steps) {
        bool all_done = true;
        for (size_t i = 0; i < nr; ++i)
            if (!machines[i].done) {
                all_done = false;
                break;
            }
        if (all_done) break;

        const int bp = static_cast<int>(
            std::min<int64_t>(kBlock, su.n_steps - k0));
        const int gen = (bp + 1) & ~1;  // even count for Box-Muller pairs
        rng.fill_u64(raw, static_cast<size_t>(gen));
        normals_block(raw, z, gen);
        if (negate)
            for (int j = 0; j < bp; ++j) z[j] = -z[j];
        double x = xlast;
        double xmax = -1e300;
        for (int j = 0; j < bp; ++j) {
            x += drift + vol * z[j];
            X[j] = x;
            xmax = std::max(xmax, std::abs(x));
        }
        xlast = x;
        if (xmax > 600.0) {
            overflow = true;
            break;
        }

        for (size_t i = 0; i < nr; ++i)
            decision_scan(su.specs[i], machines[i], X, k0, bp);

        bool need_prices = WithInstant;
        for (size_t i = 0; i < nr && !need_prices; ++i)
            need_prices = !machines[i].done && machines[i].entry_step >= 0;
        if (need_prices) exp_block(X, E, bp);

        for (size_t i = 0; i < nr; ++i)
            accrual_scan<WithInstant>(su, su.specs[i], machines[i], E, k0, bp);

        k0 += bp;
    }

    for (size_t i = 0; i < nr; ++i) {
        PathResult& r = out[i];
        r.overflow = overflow;
        if (overflow) {
            r.delayed = std::numeric_limits<double>::quiet_NaN();
            r.instant = std::numeric_limits<double>::quiet_NaN();
        } else {
            r.delayed = machines[i].flows - machines[i].costs;
            r.instant = machines[i].inst_flows - machines[i].inst_lumps;
        }
    }
}

template <bool WithInstant>
void run_engine(const EngineSetup& su, const McConfig& cfg,
                std::vector<std::vector<double>>& delayed,
                std::vector<std::vector<double>>* instant) {
    const size_t nr = su.specs.size();
    const size_t np = static_cast<size_t>(cfg.n_paths);
    delayed.assign(nr, std::vector<double>(np, 0.0));
    if (instant) instant->assign(nr, std::vector<double>(np, 0.0));

    unsigned hw = std::thread::hardware_concurrency();
    int n_threads = cfg.n_threads > 0 ? cfg.n_threads
                                      : static_cast<int>(hw ? hw : 1);
    n_threads = std::max(1, std::min<int>(n_threads, 64));

    const auto worker = [&](int64_t begin, int64_t end) {
        std::vector<MachineState> machines;
        std::vector<PathResult> results(nr);
        for (int64_t p = begin; p < end; ++p) {
            run_path<WithInstant>(su, cfg.seed, p, cfg.antithetic, machines,
                                  results);
            for (size_t i = 0; i < nr; ++i) {
                delayed[i][static_cast<size_t>(p)] = results[i].delayed;
                if (instant)
                    (*instant)[i][static_cast<size_t>(p)] = results[i].instant;
            }
        }
    };

    if (n_threads == 1 || cfg.n_paths < 2 * n_threads) {
        worker(0, cfg.n_paths);
    } else {
        std::vector<std::thread> pool;
        const int64_t chunk = (cfg.n_paths + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int64_t b = t * chunk;
            const int64_t e = std::min<int64_t>(cfg.n_paths, b + chunk);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
}

// Pairwise summation keeps the reduction deterministic and accurate no
// matter how the paths were produced.
double pairwise_sum(const double* x, size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

struct Stats {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
    long n_overflow = 0;
};

// Mean and standard error over samples; with antithetic the samples are
// the pair averages. NaN entries (overflowed paths) are dropped.
Stats reduce(const std::vector<double>& payoffs, bool antithetic) {
    std::vector<double> samples;
    long overflow = 0;
    if (antithetic) {
        samples.reserve(payoffs.size() / 2);
        for (size_t i = 0; i + 1 < payoffs.size(); i += 2) {
            const double a = payoffs[i], b = payoffs[i + 1];
            if (std::isnan(a) || std::isnan(b)) {
                overflow += std::isnan(a) + std::isnan(b);
                continue;
            }
            samples.push_back(0.5 * (a + b));
        }
    } else {
        samples.reserve(payoffs.size());
        for (double v : payoffs) {
            if (std::isnan(v)) {
                ++overflow;
                continue;
            }
            samples.push_back(v);
        }
    }
    Stats st;
    st.n = static_cast<long>(samples.size());
    st.n_overflow = overflow;
    if (samples.empty()) return st;
    st.mean = pairwise_sum(samples.data(), samples.size()) / double(st.n);
    if (st.n > 1) {
        std::vector<double> sq(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            const double d = samples[i] - st.mean;
            sq[i] = d * d;
        }
        const double var =
            pairwise_sum(sq.data(), sq.size()) / double(st.n - 1);
        st.se = std::sqrt(var / double(st.n));
    }
    return st;
}

}  // namespace

double truncation_bound(const ProjectParams& params, double t_max) {
    return params.p0 * std::exp((params.mu - params.r) * t_max) /
               (params.r - params.mu) +
           std::abs(params.C) / params.r * std::exp(-params.r * t_max);
}

double choose_t_max(const ProjectParams& params, double value_scale) {
    if (!(params.r > params.mu))
        throw PreconditionError("choose_t_max requires r > mu");
    const double target = 1e-3 * (std::abs(value_scale) + 1.0);
    double t = std::max(1.0, params.delta + 1.0);
    for (int i = 0; i < 100000 && truncation_bound(params, t) >= target; ++i)
        t += 1.0;
    return t;
}

PolicyOutcome summarize(const std::vector<double>& payoffs,
                        const ProjectParams& params, const McConfig& cfg) {
    const Stats st = reduce(payoffs, cfg.antithetic);
    PolicyOutcome out;
    out.mean = st.mean;
    out.std_error = st.se;
    out.n_effective = st.n;
    out.n_overflow = st.n_overflow;
    const int64_t n_steps =
        static_cast<int64_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
    out.truncation_bound = truncation_bound(params, double(n_steps) * cfg.dt);
    return out;
}

std::vector<std::vector<double>> simulate_policy_payoffs(
    const ProjectParams& params,
    const std::vector<std::pair<EntryRule, ExitRule>>& rules,
    const McConfig& cfg) {
    const EngineSetup su = make_setup(params, rules, cfg);
    std::vector<std::vector<double>> delayed;
    run_engine<false>(su, cfg, delayed, nullptr);
    return delayed;
}

PolicyOutcome simulate_policy(const ProjectParams& params, const EntryRule& entry,
                              const ExitRule& exit, const McConfig& cfg) {
    const auto payoffs = simulate_policy_payoffs(params, {{entry, exit}}, cfg);
    return summarize(payoffs[0], params, cfg);
}

EquivalenceOutcome delayed_payoff_equivalence_residual(const ProjectParams& params,
                                                       const EntryRule& entry,
                                                       const ExitRule& exit,
                                                       const McConfig& cfg) {
    const EngineSetup su = make_setup(params, {{entry, exit}}, cfg);
    std::vector<std::vector<double>> delayed, instant;
    run_engine<true>(su, cfg, delayed, &instant);

    std::vector<double> diff(delayed[0].size());
    double max_abs = 0.0;
    for (size_t i = 0; i < diff.size(); ++i) {
        diff[i] = delayed[0][i] - instant[0][i];
        if (!std::isnan(diff[i])) max_abs = std::max(max_abs, std::abs(diff[i]));
    }
    const Stats sd = reduce(delayed[0], cfg.antithetic);
    const Stats si = reduce(instant[0], cfg.antithetic);
    const Stats sr = reduce(diff, cfg.antithetic);

    EquivalenceOutcome out;
    out.mean_delayed = sd.mean;
    out.mean_instant = si.mean;
    out.residual_mean = sr.mean;
    out.residual_se = sr.se;
    out.max_abs_path_residual = max_abs;
    out.n_effective = sr.n;
    return out;
}

DominanceReport policy_dominance_check(const ProjectParams& params,
                                       const McConfig& cfg) {
    const SolveResult solved = solve(params);
    if (std::holds_alternative<InfiniteValue>(solved))
        throw PreconditionError(
            "policy_dominance_check requires a finite-value regime");
    const Solution& sol = std::get<Solution>(solved);
    return policy_dominance_check(params, sol.entry_rule, sol.exit_rule, cfg);
}

DominanceReport policy_dominance_check(const ProjectParams& params,
                                       const EntryRule& base_entry,
                                       const ExitRule& base_exit,
                                       const McConfig& cfg) {
    std::vector<std::pair<EntryRule, ExitRule>> rules;
    std::vector<std::string> labels;
    rules.emplace_back(base_entry, base_exit);
    labels.emplace_back("optimal");

    const auto add = [&](const std::string& label, const EntryRule& er,
                         const ExitRule& xr) {
        rules.emplace_back(er, xr);
        labels.push_back(label);
    };
    const double scales[] = {0.9, 1.1, 0.75, 1.25};

    switch (base_entry.kind) {
        case EntryRule::Kind::HitOutsideBand:
            for (double s : scales)
                add("entry_lower_x" + std::to_string(s),
                    EntryRule::hit_outside_band(base_entry.lower * s,
                                                base_entry.upper),
                    base_exit);
            for (double s : scales) {
                const double hi = base_entry.upper * s;
                if (hi > base_entry.lower)
                    add("entry_upper_x" + std::to_string(s),
                        EntryRule::hit_outside_band(base_entry.lower, hi),
                        base_exit);
            }
            add("enter_immediately", EntryRule::immediately(), base_exit);
            break;
        case EntryRule::Kind::HitAbove:
            for (double s : scales)
                add("entry_x" + std::to_string(s),
                    EntryRule::hit_above(base_entry.upper * s), base_exit);
            add("enter_immediately", EntryRule::immediately(), base_exit);
            break;
        case EntryRule::Kind::Immediately:
            for (double s : {1.1, 1.5, 2.0})
                add("entry_hit_above_x" + std::to_string(s),
                    EntryRule::hit_above(params.p0 * s), base_exit);
            add("never_enter", EntryRule::never(), base_exit);
            break;
        case EntryRule::Kind::Never:
            break;
    }
    if (base_exit.kind == ExitRule::Kind::FirstBelowAfterEntry) {
        for (double s : scales)
            add("exit_x" + std::to_string(s), base_entry,
                ExitRule::first_below(base_exit.threshold * s));
        add("never_exit", base_entry, ExitRule::never());
    }

    const auto payoffs = simulate_policy_payoffs(params, rules, cfg);

    DominanceReport rep;
    rep.optimal = summarize(payoffs[0], params, cfg);
    rep.all_pass = true;
    for (size_t i = 1; i < rules.size(); ++i) {
        DominanceReport::Competitor c;
        c.label = labels[i];
        c.outcome = summarize(payoffs[i], params, cfg);
        std::vector<double> diff(payoffs[0].size());
        for (size_t p = 0; p < diff.size(); ++p)
            diff[p] = payoffs[0][p] - payoffs[i][p];
        const Stats ds = reduce(diff, cfg.antithetic);
        c.diff_mean = ds.mean;
        c.diff_se = ds.se;
        c.pass = c.diff_mean >= -3.0 * c.diff_se;
        rep.all_pass = rep.all_pass && c.pass;
        rep.competitors.push_back(std::move(c));
    }
    return rep;
}

PolicyOutcome martingale_check(const ProjectParams& raw, double t,
                               const McConfig& cfg) {
    const ProjectParams params = validate(raw);
    if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (!(cfg.dt > 0.0) || !(t >= cfg.dt))
        throw ConfigError("martingale check needs 0 < dt <= t");
    if (cfg.antithetic && (cfg.n_paths % 2) != 0)
        throw ConfigError("antithetic sampling needs an even path count");

    const int64_t n_steps = static_cast<int64_t>(std::ceil(t / cfg.dt - 1e-9));
    const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * cfg.dt;
    const double vol = params.sigma * std::sqrt(cfg.dt);

    std::vector<double> vals(static_cast<size_t>(cfg.n_paths));
    alignas(64) static thread_local uint64_t raw_u[kBlock];
    alignas(64) static thread_local double z[kBlock];
    for (int64_t p = 0; p < cfg.n_paths; ++p) {
        const uint64_t stream = cfg.antithetic ? uint64_t(p / 2) : uint64_t(p);
        const bool negate = cfg.antithetic && (p & 1);
        Philox4x32 rng(cfg.seed, stream);
        double x = 0.0;
        int64_t k = 0;
        while (k < n_steps) {
            const int bp = static_cast<int>(std::min<int64_t>(kBlock, n_steps - k));
            const int gen = (bp + 1) & ~1;
            rng.fill_u64(raw_u, static_cast<size_t>(gen));
            normals_block(raw_u, z, gen);
            for (int j = 0; j < bp; ++j) x += drift + (negate ? -vol : vol) * z[j];
            k += bp;
        }
        vals[static_cast<size_t>(p)] =
            std::exp(x - params.mu * double(n_steps) * cfg.dt);
    }
    const Stats st = reduce(vals, cfg.antithetic);
    PolicyOutcome out;
    out.mean = st.mean;
    out.std_error = st.se;
    out.n_effective = st.n;
    out.truncation_bound = 0.0;
    out.n_overflow = st.n_overflow;
    return out;
}

}  // namespace entryexit
