#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace snipsde;

TEST(ModelIo, OlsRoundTripPreservesPredictions) {
    auto m = fit_ols(test::ou_pairs(300, 1.0, 1.0, 0.05, 1));
    m.set_time_context(AffineTimeMap{12.0, 64.0}, 0.0625);
    const auto back = model_from_json(model_to_json(m, "test"));
    EXPECT_EQ(back.method(), RegressionMethod::ols);
    EXPECT_EQ(back.mean_coefficients(), m.mean_coefficients());
    EXPECT_EQ(back.var_coefficients(), m.var_coefficients());
    EXPECT_EQ(back.time_map(), m.time_map());
    EXPECT_EQ(back.spacing(), 0.0625);
    EXPECT_EQ(back.training_summary().n_pairs, 300u);
}

TEST(ModelIo, LocalLinearRoundTripPreservesPredictions) {
    const auto pairs = test::ou_pairs(200, 1.0, 1.0, 0.05, 2);
    const auto m = fit_local_linear(pairs, std::vector<double>{0.5, 0.2}, std::vector<double>{0.7, 0.3});
    const auto dir = test::scratch_dir("model_io");
    save_model((dir / "m.json").string(), m);
    const auto back = load_model((dir / "m.json").string());
    EXPECT_EQ(back.mean_bandwidth(), m.mean_bandwidth());
    EXPECT_EQ(back.var_bandwidth(), m.var_bandwidth());
    for (double x : {-1.0, 0.2, 1.3})
        for (double t : {0.1, 0.6}) {
            const auto z = Predictor::regular(x, t);
            EXPECT_EQ(back.predict_mean(z), m.predict_mean(z));
            EXPECT_EQ(back.predict_var(z), m.predict_var(z));
        }
}

TEST(ModelIo, OlsFileHasThreeAndThreeCoefficients) {
    const auto j = model_to_json(fit_ols(test::ou_pairs(100, 1.0, 1.0, 0.05, 3)));
    EXPECT_EQ(j["mean"]["coefficients"].size(), 3u);
    EXPECT_EQ(j["variance"]["coefficients"].size(), 3u);
    EXPECT_EQ(j["predictor_dim"], 2);
}

TEST(ModelIo, MalformedFilesAreFormatErrors) {
    EXPECT_THROW(model_from_json(nlohmann::json{{"format", "other"}}), FormatError);
    auto j = model_to_json(fit_ols(test::ou_pairs(100, 1.0, 1.0, 0.05, 4)));
    j["version"] = 99;
    EXPECT_THROW(model_from_json(j), FormatError);
    j["version"] = 1;
    j["mean"]["coefficients"] = {1.0, 2.0};
    EXPECT_THROW(model_from_json(j), FormatError);
    j.erase("mean");
    EXPECT_THROW(model_from_json(j), FormatError);
    const auto dir = test::scratch_dir("model_io_bad");
    test::write_file(dir / "bad.json", "{ not json");
    EXPECT_THROW(load_model((dir / "bad.json").string()), FormatError);
    EXPECT_THROW(load_model((dir / "missing.json").string()), Error);
}
