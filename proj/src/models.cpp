#include "spinspec/models.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spinspec/parser.hpp"
#include "spinspec/validate.hpp"

namespace spinspec {

std::string asset_root() {
    if (const char* env = std::getenv("SPINSPEC_ASSETS")) return env;
#ifdef SPINSPEC_ASSET_ROOT
    return SPINSPEC_ASSET_ROOT;
#else
    return ".";
#endif
}

std::vector<std::string> list_models() {
    return {"one_column",       "three_column",    "three_column_hold",
            "zero_one",         "five_play_lines", "ten_play_lines",
            "reel_always_hold", "reel_hold_cost",  "reel_hold_one_round"};
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::UnknownAsset, "cannot open `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ModelPtr load_model(const std::string& name) {
    auto known = list_models();
    if (std::find(known.begin(), known.end(), name) == known.end())
        throw Error(ErrorKind::UnknownAsset, "unknown model `" + name + "`");
    std::string path = asset_root() + "/models/" + name + ".psm";
    ModelPtr m = parse_model(read_file(path), name);
    Diagnostics diags = validate_model(*m);
    if (!diags.empty())
        throw Error(ErrorKind::Validation,
                    "bundled model `" + name + "` failed validation: " + diags[0].str());
    return m;
}

FormulaSpecPtr load_formula(const std::string& name) {
    std::string path = asset_root() + "/formulas/" + name + ".qmf";
    return parse_formula(read_file(path), name);
}

FormulaSpecPtr load_formula(const std::string& name, const ModelSpec& model) {
    FormulaSpecPtr f = load_formula(name);
    Diagnostics diags = validate_formula(*f, model);
    if (!diags.empty())
        throw Error(ErrorKind::Validation,
                    "bundled formula `" + name + "` failed validation: " + diags[0].str());
    return f;
}

std::vector<GoldenEntry> golden_results() {
    std::string path = asset_root() + "/golden/golden.json";
    nlohmann::json doc = nlohmann::json::parse(read_file(path));
    std::vector<GoldenEntry> out;
    for (const auto& item : doc.at("entries")) {
        GoldenEntry e;
        e.model = item.at("model").get<std::string>();
        e.formula = item.at("formula").get<std::string>();
        if (item.contains("params"))
            for (const auto& [k, v] : item.at("params").items())
                e.params[k] = v.get<std::string>();
        if (item.contains("exact")) {
            auto r = Rat::parse(item.at("exact").get<std::string>());
            if (!r) throw Error(ErrorKind::Validation, "bad exact value in golden registry");
            e.expect_exact = *r;
        }
        if (item.contains("value")) {
            auto r = Rat::parse(item.at("value").get<std::string>());
            if (!r) throw Error(ErrorKind::Validation, "bad value in golden registry");
            e.expect_value = *r;
            auto t = Rat::parse(item.at("tolerance").get<std::string>());
            if (!t) throw Error(ErrorKind::Validation, "bad tolerance in golden registry");
            e.tolerance = *t;
        }
        e.provenance = item.value("provenance", std::string{});
        e.slow = item.value("slow", false);
        e.criterion = item.value("criterion", 0);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace spinspec
