#pragma once

// Versioned JSON serialization of fitted conditional models.

#include "snipsde/data_model.hpp"
#include "snipsde/error.hpp"
#include "snipsde/regression.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace snipsde {

inline constexpr const char* model_format_name = "snipsde.conditional_model";
inline constexpr int model_format_version = 1;

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace detail

inline nlohmann::ordered_json model_to_json(const ConditionalModel& m, const std::string& created_by = {}) {
    nlohmann::ordered_json j;
    j["format"] = model_format_name;
    j["version"] = model_format_version;
    j["created_by"] = created_by;
    j["method"] = to_string(m.method());
    j["predictor_dim"] = m.predictor_dim();
    j["predictors"] = m.predictor_dim() == 2 ? std::vector<std::string>{"x", "t"} : std::vector<std::string>{"x", "t", "s"};

    const auto& s = m.training_summary();
    j["training"]["n_pairs"] = s.n_pairs;
    auto& ranges = j["training"]["ranges"] = nlohmann::ordered_json::array();
    for (const auto& [lo, hi] : s.ranges) ranges.push_back({lo, hi});

    j["time_map"] = {{"offset", m.time_map().offset}, {"scale", m.time_map().scale}};
    j["spacing"] = m.spacing();

    if (m.method() == RegressionMethod::ols) {
        j["mean"]["coefficients"] = detail::to_std(m.mean_coefficients());
        j["variance"]["coefficients"] = detail::to_std(m.var_coefficients());
    } else {
        j["mean"]["bandwidth"] = m.mean_bandwidth();
        j["variance"]["bandwidth"] = m.var_bandwidth();
        j["ridge"] = m.ridge();
        const auto& smp = *m.sample();
        auto& z = j["sample"]["z"] = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < smp.z.rows(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(smp.z.cols()));
            for (Eigen::Index d = 0; d < smp.z.cols(); ++d) row[static_cast<std::size_t>(d)] = smp.z(i, d);
            z.push_back(row);
        }
        j["sample"]["y"] = detail::to_std(smp.y);
        j["sample"]["squared_residuals"] = detail::to_std(smp.sq_resid);
    }
    return j;
}

inline ConditionalModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string{}) != model_format_name) throw FormatError("not a conditional model file");
        const int version = j.at("version").get<int>();
        if (version != model_format_version)
            throw FormatError("unsupported model format version " + std::to_string(version));

        const auto dim = j.at("predictor_dim").get<std::size_t>();
        TrainingSummary summary;
        summary.n_pairs = j.at("training").at("n_pairs").get<std::size_t>();
        for (const auto& r : j.at("training").at("ranges")) summary.ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());

        const std::string method = j.at("method").get<std::string>();
        ConditionalModel model = [&] {
            if (method == "ols")
                return ConditionalModel::make_ols(dim, detail::to_eigen(j.at("mean").at("coefficients").get<std::vector<double>>()),
                                                  detail::to_eigen(j.at("variance").at("coefficients").get<std::vector<double>>()),
                                                  summary);
            if (method == "local_linear") {
                auto smp = std::make_shared<LocalSample>();
                const auto& z = j.at("sample").at("z");
                smp->z.resize(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(dim));
                for (std::size_t i = 0; i < z.size(); ++i) {
                    if (z[i].size() != dim) throw FormatError("sample row has the wrong number of predictors");
                    for (std::size_t d = 0; d < dim; ++d)
                        smp->z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = z[i][d].get<double>();
                }
                smp->y = detail::to_eigen(j.at("sample").at("y").get<std::vector<double>>());
                smp->sq_resid = detail::to_eigen(j.at("sample").at("squared_residuals").get<std::vector<double>>());
                return ConditionalModel::make_local_linear(std::move(smp), j.at("mean").at("bandwidth").get<std::vector<double>>(),
                                                           j.at("variance").at("bandwidth").get<std::vector<double>>(),
                                                           summary, j.value("ridge", LocalLinearOptions{}.ridge));
            }
            throw FormatError("unknown regression method '" + method + "'");
        }();
        AffineTimeMap map;
        if (j.contains("time_map")) {
            map.offset = j["time_map"].at("offset").get<double>();
            map.scale = j["time_map"].at("scale").get<double>();
            if (!(map.scale > 0.0)) throw FormatError("time map scale must be positive");
        }
        model.set_time_context(map, j.value("spacing", 0.0));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const std::string& path, const ConditionalModel& m, const std::string& created_by = {}) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file '" + path + "'");
    out << model_to_json(m, created_by).dump(2) << '\n';
}

inline ConditionalModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace snipsde
