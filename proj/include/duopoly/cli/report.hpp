#pragma once

// JSON renderings of parameter sets and fit results.

#include "duopoly/bass.hpp"
#include "duopoly/fitting.hpp"

#include <nlohmann/json.hpp>

namespace duopoly::cli {

inline nlohmann::ordered_json params_json(const BassParams& k)
{
    nlohmann::ordered_json j;
    for (Coefficient c : kAllCoefficients)
        j[std::string(name_of(c))] = k[c];
    return j;
}

inline nlohmann::ordered_json fit_report_json(int experiment, const FitResult& r)
{
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["params"] = params_json(r.params);
    j["sse"] = r.sse;
    j["r2"] = r.r2;
    j["area_diff_pct"] = r.area_diff_pct;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    return j;
}

inline nlohmann::ordered_json single_fit_json(const std::string& label, const SingleBrandFit& f)
{
    nlohmann::ordered_json j;
    j["brand"] = label;
    j["params"] = {{"p", f.params.p}, {"q", f.params.q}};
    j["sse"] = f.sse;
    j["r2"] = f.r2;
    j["area_diff_pct"] = f.area_diff_pct;
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    return j;
}

} // namespace duopoly::cli
