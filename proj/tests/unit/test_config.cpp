#include "doctest.h"

#include "qpg/config.hpp"
#include "qpg/driver.hpp"
#include "qpg/errors.hpp"
#include "qpg/qpg.h"

#include "json.hpp"

#include <cstdlib>
#include <string>

using namespace qpg;

namespace {

const char* kMathieu = R"({
  "name": "m", "basis": ["1"], "theta": "standard",
  "coefficients": [{"theta": [1], "value": "0.005"}], "tau": "0.002",
  "N": 3, "epsilon": {"max": "1e-3", "points": 12, "ratio": 2}, "lambda": "2"
})";

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::config) return e.what();
        return std::string("wrong code: ") + e.what();
    }
    return "";
}

std::string with(const std::string& key_value) {
    std::string s = kMathieu;
    s.insert(s.find('{') + 1, key_value + ",");
    return s;
}

}  // namespace

TEST_CASE("a valid config resolves") {
    const auto c = parse_config(kMathieu);
    CHECK(c.name == "m");
    CHECK(c.N == 3);
    CHECK(c.tau == quad("0.002"));
    CHECK(c.ladder().size() == 12);
    CHECK(c.potential().coef(Freq::unit(0)).re == quad("0.005"));
    CHECK(*c.lambda == "2");
    const auto j = nlohmann::json::parse(c.source);
    CHECK(j.at("name") == "m");
}

TEST_CASE("schema errors carry the field path") {
    CHECK(config_error(with(R"("bogus": 1)")).find("/bogus") != std::string::npos);
    CHECK(config_error(R"({"name": "x", "basis": ["1"], "coefficients": [{"theta": [1], "value": "abc"}]})")
              .find("/coefficients/0/value") != std::string::npos);
    CHECK(config_error(R"({"name": "x", "basis": ["1"], "coefficients": [{"theta": [1, 2], "value": 1}]})")
              .find("/coefficients/0/theta") != std::string::npos);
    CHECK(config_error(std::string(kMathieu).replace(std::string(kMathieu).find("\"N\": 3"), 6, "\"N\": 0")).find("/N") != std::string::npos);
    CHECK(config_error(R"({"name": "x", "basis": ["1"], "coefficients": [], "epsilon": {"points": -1}})")
              .find("/epsilon/points") != std::string::npos);
    CHECK_FALSE(config_error("{not json").empty());
}

TEST_CASE("numbers keep their shortest decimal text") {
    const auto c = parse_config(R"({"name": "x", "basis": ["1"], "coefficients": [{"theta": [1], "value": 0.001}]})");
    CHECK(c.potential().coef(Freq::unit(0)).re == quad("0.001"));
}

TEST_CASE("frequency literals") {
    CHECK(parse_freq("1", 1) == Freq::unit(0));
    CHECK(parse_freq("[1,-2]", 2) == Freq::unit(0) + Freq::unit(1, -2));
    CHECK(parse_freq("0, 3", 2) == Freq::unit(1, 3));
    CHECK_THROWS_AS(parse_freq("1,2", 1), Error);
    CHECK_THROWS_AS(parse_freq("x", 1), Error);
}

TEST_CASE("ladder literals") {
    const auto a = parse_ladder("1e-3,5e-4");
    CHECK(a.size() == 2);
    CHECK(a[1] == quad("5e-4"));
    const auto b = parse_ladder("1e-3:6:2");
    CHECK(b.size() == 6);
    CHECK(b[5] == quad("1e-3") / 32);
    CHECK_THROWS_AS(parse_ladder(""), Error);
}

TEST_CASE("C API round trip") {
    qpg_config* c = nullptr;
    REQUIRE(qpg_config_parse(kMathieu, &c) == QPG_OK);
    char* out = nullptr;
    REQUIRE(qpg_classify(c, nullptr, &out) == QPG_OK);
    const auto j = nlohmann::json::parse(out);
    CHECK(j.at("label").at("case") == "nonresonant");
    qpg_string_free(out);

    char* js = nullptr;
    char* csv = nullptr;
    REQUIRE(qpg_ids_scan(c, "2", "1e-3:8", &js, &csv) == QPG_OK);
    CHECK(std::string(csv).rfind("eps,ids,deviation,hill,truncated,err_truncated", 0) == 0);
    const auto k = nlohmann::json::parse(js);
    CHECK(k.at("fit").at("exponents").size() == 3);
    qpg_string_free(js);
    qpg_string_free(csv);

    char* res = nullptr;
    REQUIRE(qpg_config_resolved(c, &res) == QPG_OK);
    CHECK(nlohmann::json::parse(res).at("N") == 3);
    qpg_string_free(res);
    qpg_config_free(c);
}

TEST_CASE("C API errors") {
    qpg_config* c = nullptr;
    CHECK(qpg_config_parse(nullptr, &c) == QPG_ERR_ARGUMENT);
    CHECK(std::string(qpg_last_error()).find("null argument") != std::string::npos);
    CHECK(qpg_config_parse("{\"name\":1}", &c) == QPG_ERR_CONFIG);
    CHECK(c == nullptr);
    CHECK(qpg_config_load("/nonexistent/config.json", &c) == QPG_ERR_IO);
    CHECK(std::string(qpg_status_name(QPG_ERR_GEOMETRY)) == "geometry");
    REQUIRE(qpg_config_parse(kMathieu, &c) == QPG_OK);
    char* out = nullptr;
    CHECK(qpg_superres(c, 1, &out) == QPG_ERR_CONFIG);
    CHECK(qpg_g_scan(c, "abc", 0, 10, &out) == QPG_ERR_CONFIG);
    CHECK(qpg_gap_scan(c, "1,2", nullptr, &out, nullptr) == QPG_ERR_CONFIG);
    qpg_config_free(c);
    CHECK(std::string(qpg_version()).size() > 0);
}

TEST_CASE("g-scan table") {
    const auto c = parse_config(kMathieu);
    const std::string csv = g_scan(c, quad("1e-3"), 2.0, 5);
    CHECK(csv.rfind("xi,G,zone\n", 0) == 0);
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 6);
}

#ifdef QPG_CLI_PATH
namespace {
int run_cli(const std::string& args) {
    const std::string cmd = std::string(QPG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST_CASE("CLI exit codes") {
    const std::string cfg = std::string(QPG_CONFIG_DIR) + "/ids_nonresonant.json";
    CHECK(run_cli("classify --config " + cfg) == 0);
    CHECK(run_cli("classify") == 2);
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("classify --config /nonexistent.json") == 10 + QPG_ERR_IO);
    CHECK(run_cli("superres --config " + cfg) == 10 + QPG_ERR_CONFIG);
    CHECK(run_cli("--version") == 0);
}
#endif
