#include "entryexit/policy.hpp"

#include <json.hpp>

#include "entryexit/errors.hpp"

namespace entryexit {

SolveResult solve(const ProjectParams& raw) {
    const ProjectParams params = validate(raw);
    if (params.r <= params.mu) return InfiniteValue{};

    Solution sol;
    sol.params = params;
    sol.lambdas = lambda_roots(params);
    sol.coeffs = transform_coeffs(params);
    sol.exit = solve_exit(params, sol.lambdas);
    sol.entry = solve_entry(params, sol.lambdas, sol.exit, sol.coeffs);
    sol.regime = sol.entry.regime;

    switch (sol.regime) {
        case Regime::I_EnterNow_NeverExit:
            sol.entry_rule = EntryRule::immediately();
            break;
        case Regime::II_SingleEntry_NeverExit:
            sol.entry_rule = EntryRule::hit_above(*sol.entry.p_I);
            break;
        case Regime::III_EnterNow_Exit:
        case Regime::V_EnterNow_Exit_NegSum:
            sol.entry_rule = EntryRule::immediately();
            break;
        case Regime::IV_SingleEntry_Exit:
            sol.entry_rule = EntryRule::hit_above(*sol.entry.p_I);
            break;
        case Regime::VI_DoubleEntry_Exit:
            sol.entry_rule =
                EntryRule::hit_outside_band(*sol.entry.p_I1, *sol.entry.p_I2);
            break;
        case Regime::InfiniteValue:
            throw PreconditionError("unreachable regime");
    }
    sol.exit_rule = sol.exit.has_trigger ? ExitRule::first_below(sol.exit.p_O)
                                         : ExitRule::never();
    return sol;
}

DecisionReport describe(const Solution& sol) {
    DecisionReport rep;
    rep.regime = std::string(regime_name(sol.regime));
    if (sol.exit.has_trigger) {
        rep.p_O = sol.exit.p_O;
        rep.A = sol.exit.A;
    }
    rep.p_I = sol.entry.p_I;
    rep.p_I1 = sol.entry.p_I1;
    rep.p_I2 = sol.entry.p_I2;
    rep.B = sol.entry.B;
    rep.B1 = sol.entry.B1;
    rep.B2 = sol.entry.B2;
    rep.lambda1 = sol.lambdas.lambda1;
    rep.lambda2 = sol.lambdas.lambda2;
    rep.k1 = sol.coeffs.k1;
    rep.k0 = sol.coeffs.k0;
    rep.l1 = sol.coeffs.l1;
    rep.l0 = sol.coeffs.l0;
    rep.J_at_p0 = sol.value(sol.params.p0);
    return rep;
}

DecisionReport describe(const SolveResult& result) {
    if (std::holds_alternative<InfiniteValue>(result)) {
        DecisionReport rep;
        rep.regime = std::string(regime_name(Regime::InfiniteValue));
        return rep;
    }
    return describe(std::get<Solution>(result));
}

namespace {

void put(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
}

void get(const nlohmann::json& j, const char* key, std::optional<double>& v) {
    if (j.contains(key)) v = j.at(key).get<double>();
}

}  // namespace

std::string report_to_json(const DecisionReport& rep) {
    nlohmann::json j;
    j["regime"] = rep.regime;
    put(j, "p_O", rep.p_O);
    put(j, "p_I", rep.p_I);
    put(j, "p_I1", rep.p_I1);
    put(j, "p_I2", rep.p_I2);
    put(j, "A", rep.A);
    put(j, "B", rep.B);
    put(j, "B1", rep.B1);
    put(j, "B2", rep.B2);
    put(j, "lambda1", rep.lambda1);
    put(j, "lambda2", rep.lambda2);
    put(j, "k1", rep.k1);
    put(j, "k0", rep.k0);
    put(j, "l1", rep.l1);
    put(j, "l0", rep.l0);
    put(j, "J_at_p0", rep.J_at_p0);
    return j.dump(2);
}

DecisionReport report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    DecisionReport rep;
    rep.regime = j.at("regime").get<std::string>();
    get(j, "p_O", rep.p_O);
    get(j, "p_I", rep.p_I);
    get(j, "p_I1", rep.p_I1);
    get(j, "p_I2", rep.p_I2);
    get(j, "A", rep.A);
    get(j, "B", rep.B);
    get(j, "B1", rep.B1);
    get(j, "B2", rep.B2);
    get(j, "lambda1", rep.lambda1);
    get(j, "lambda2", rep.lambda2);
    get(j, "k1", rep.k1);
    get(j, "k0", rep.k0);
    get(j, "l1", rep.l1);
    get(j, "l0", rep.l0);
    get(j, "J_at_p0", rep.J_at_p0);
    return rep;
}

}  // namespace entryexit
