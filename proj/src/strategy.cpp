#include "spinspec/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spinspec {

namespace {

long layer_of(const std::vector<Value>& fix_args, int horizon_index) {
    if (horizon_index < 0 || horizon_index >= static_cast<int>(fix_args.size())) return 0;
    return fix_args[static_cast<size_t>(horizon_index)].as_int().to_long();
}

// Records argext witnesses keyed by (state, horizon layer).
struct Recorder : ChoiceHook {
    int horizon_index = -1;
    std::map<std::pair<StateId, long>, ActionLabel>* choices;
    std::map<std::pair<StateId, long>, DecisionPoint>* rich;
    bool* saw_decision;
    bool* consistent;

    void horizon(int param_index) override { horizon_index = param_index; }

    void observe(StateId s, const std::vector<Value>& fix_args, bool maximize,
                 const std::vector<ActionLabel>& alternatives, size_t chosen,
                 const ExtReal& value) override {
        *saw_decision = true;
        long layer = layer_of(fix_args, horizon_index);
        auto key = std::make_pair(s, layer);
        auto [it, fresh] = choices->emplace(key, alternatives[chosen]);
        if (!fresh && !(it->second == alternatives[chosen])) *consistent = false;
        if (rich) {
            auto rit = rich->find(key);
            if (rit == rich->end()) {
                DecisionPoint p;
                p.state = s;
                p.horizon = layer;
                p.available = alternatives;
                p.chosen = alternatives[chosen];
                p.value = value.reduced();
                p.maximize = maximize;
                rich->emplace(key, std::move(p));
            }
        }
    }
};

struct Forcer : ChoiceHook {
    int horizon_index = -1;
    const StrategyTable* table;
    StateId override_state = -1;
    long override_layer = -1;
    const ActionLabel* override_label = nullptr;

    void horizon(int param_index) override { horizon_index = param_index; }

    int resolve(StateId s, const std::vector<Value>& fix_args,
                const std::vector<ActionLabel>& alternatives) override {
        long layer = layer_of(fix_args, horizon_index);
        const ActionLabel* want = nullptr;
        if (override_label && s == override_state && layer == override_layer)
            want = override_label;
        else
            want = table->choice_at(s, layer);
        if (!want)
            throw Error(ErrorKind::IncompleteTable,
                        "no strategy entry for state " + std::to_string(s) + " at layer " +
                            std::to_string(layer));
        for (size_t i = 0; i < alternatives.size(); ++i)
            if (alternatives[i] == *want) return static_cast<int>(i);
        throw Error(ErrorKind::IncompleteTable,
                    "strategy entry " + want->str() + " is not an available choice");
    }
};

}  // namespace

StrategyTable extract_strategy(const Plts& plts, const FormulaSpec& formula,
                               const EvalOptions& opts, long slice_remaining) {
    StrategyTable table;
    table.model = plts.model ? plts.model->name : "";
    table.formula = formula.name;
    for (const auto& [k, v] : opts.params) table.params[k] = v.str();

    std::map<std::pair<StateId, long>, DecisionPoint> rich;
    bool saw = false, consistent = true;
    Recorder rec;
    rec.choices = &table.choices;
    rec.rich = &rich;
    rec.saw_decision = &saw;
    rec.consistent = &consistent;

    // per-state evaluation demands every reachable decision point
    EvalStats st;
    evaluate_per_state(plts, formula, opts, &st, &rec);

    if (!saw)
        throw Error(ErrorKind::NoChoices,
                    "the formula resolves no nondeterministic choice on this model");
    if (!consistent)
        throw Error(ErrorKind::Internal,
                    "optimal choice differs across argument tuples of one layer");

    long max_layer = 0;
    for (const auto& [k, v] : table.choices) max_layer = std::max(max_layer, k.second);
    table.horizon = max_layer + 1;
    table.slice_layer =
        slice_remaining < 0 ? 0 : std::max<long>(0, table.horizon - slice_remaining);
    for (auto& [k, p] : rich)
        if (k.second == table.slice_layer) table.slice.push_back(p);
    std::sort(table.slice.begin(), table.slice.end(),
              [](const DecisionPoint& a, const DecisionPoint& b) { return a.state < b.state; });
    return table;
}

ExtReal strategy_value(const Plts& plts, const StrategyTable& table,
                       const FormulaSpec& formula, const EvalOptions& opts) {
    Forcer forcer;
    forcer.table = &table;
    return evaluate(plts, formula, opts, &forcer).value;
}

ExtReal strategy_value_with_override(const Plts& plts, const StrategyTable& table,
                                     const FormulaSpec& formula, const EvalOptions& opts,
                                     StateId state, long layer, const ActionLabel& forced) {
    Forcer forcer;
    forcer.table = &table;
    forcer.override_state = state;
    forcer.override_layer = layer;
    forcer.override_label = &forced;
    return evaluate(plts, formula, opts, &forcer).value;
}

FeatureSet FeatureSet::from_model(const ModelSpec& model) {
    FeatureSet fs;
    auto it = model.metadata.find("feature-sort");
    if (it != model.metadata.end()) fs.sort_name = it->second;
    it = model.metadata.find("feature-wild");
    if (it != model.metadata.end()) fs.wild = it->second;
    return fs;
}

std::vector<Value> state_symbols(const Plts& plts, StateId s, const FeatureSet& features) {
    const ModelSpec* model = plts.model;
    const Sort* sort = model->sorts.lookup(features.sort_name);
    if (!sort)
        throw Error(ErrorKind::UnknownName,
                    "feature sort `" + features.sort_name + "` not declared");
    const ProcessTerm* term = plts.state_term(s);
    if (!term) return {};
    // first process call in the configuration carries the displayed symbols
    const ProcessTerm* call = nullptr;
    std::function<void(const ProcessTerm*)> find = [&](const ProcessTerm* t) {
        if (call) return;
        if (t->kind == ProcKind::CallProc) {
            call = t;
            return;
        }
        for (const auto& k : t->kids) find(k.get());
    };
    find(term);
    if (!call) return {};
    Bindings env = plts.state_env(s);
    Env e{&env, &model->functions, nullptr};
    std::vector<Value> out;
    for (const auto& arg : call->args) {
        bool closed = true;
        for (NameId v : free_vars(*arg)) {
            bool bound = false;
            for (const auto& [n, val] : env) bound |= n == v;
            closed &= bound;
        }
        if (!closed) continue;
        Value v = eval_expr(e, *arg);
        if (v.is_enum() && v.as_enum().sort_index == sort->index) out.push_back(v);
    }
    return out;
}

namespace {

struct FeatureDef {
    std::string name;
    std::function<bool(const std::vector<Value>&)> fn;
};

std::vector<FeatureDef> make_features(const ModelSpec& model, const FeatureSet& fs,
                                      size_t positions) {
    const Sort* sort = model.sorts.lookup(fs.sort_name);
    std::vector<Value> all = enumerate_sort(model.sorts, *sort);
    Value wild;
    for (const auto& v : all)
        if (*v.as_enum().name == fs.wild) wild = v;

    std::vector<FeatureDef> defs;
    auto pos_name = [](size_t i) { return std::to_string(i + 1); };
    // pairwise same-fruit (equal and not the wild symbol)
    for (size_t x = 0; x < positions; ++x)
        for (size_t y = x + 1; y < positions; ++y)
            defs.push_back(
                {"fruit" + pos_name(x) + pos_name(y), [x, y, wild](const std::vector<Value>& s) {
                     return s[x] == s[y] && !(s[x] == wild);
                 }});
    // pairwise both-wild
    for (size_t x = 0; x < positions; ++x)
        for (size_t y = x + 1; y < positions; ++y)
            defs.push_back(
                {"star" + pos_name(x) + pos_name(y), [x, y, wild](const std::vector<Value>& s) {
                     return s[x] == wild && s[y] == wild;
                 }});
    // per-position wild
    for (size_t x = 0; x < positions; ++x)
        defs.push_back({"star" + pos_name(x), [x, wild](const std::vector<Value>& s) {
                            return s[x] == wild;
                        }});
    // per-position identity
    for (size_t x = 0; x < positions; ++x)
        for (const auto& c : all)
            defs.push_back({"is_" + pos_name(x) + "_" + *c.as_enum().name,
                            [x, c](const std::vector<Value>& s) { return s[x] == c; }});
    return defs;
}

struct FitRow {
    std::vector<char> bits;  // feature valuations
    size_t label;            // index into the label table
};

double entropy(const std::map<size_t, long>& counts, long total) {
    double h = 0;
    for (const auto& [l, c] : counts) {
        (void)l;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

std::unique_ptr<TreeNode> fit_rec(std::vector<FitRow*>& rows,
                                  const std::vector<ActionLabel>& labels, size_t nfeat,
                                  size_t& nodes) {
    std::map<size_t, long> counts;
    for (const FitRow* r : rows) counts[r->label]++;
    auto node = std::make_unique<TreeNode>();
    ++nodes;
    if (counts.size() == 1) {
        node->leaf_choice = labels[rows[0]->label];
        return node;
    }
    long total = static_cast<long>(rows.size());
    double base = entropy(counts, total);
    double best_gain = -1;
    size_t best_f = 0;
    for (size_t f = 0; f < nfeat; ++f) {
        std::map<size_t, long> yes, no;
        long nyes = 0, nno = 0;
        for (const FitRow* r : rows) {
            if (r->bits[f]) {
                yes[r->label]++;
                ++nyes;
            } else {
                no[r->label]++;
                ++nno;
            }
        }
        if (nyes == 0 || nno == 0) continue;
        double g = base - (static_cast<double>(nyes) / total) * entropy(yes, nyes) -
                   (static_cast<double>(nno) / total) * entropy(no, nno);
        if (g > best_gain + 1e-12) {  // ties keep the earliest feature
            best_gain = g;
            best_f = f;
        }
    }
    if (best_gain <= 0) {
        // cannot happen with identity features over distinct tuples
        throw Error(ErrorKind::Internal, "decision tree rows are not separable");
    }
    std::vector<FitRow*> yes_rows, no_rows;
    for (FitRow* r : rows)
        (r->bits[best_f] ? yes_rows : no_rows).push_back(r);
    node->feature = static_cast<int>(best_f);
    node->yes = fit_rec(yes_rows, labels, nfeat, nodes);
    node->no = fit_rec(no_rows, labels, nfeat, nodes);
    return node;
}

}  // namespace

const ActionLabel& DecisionTree::predict(const std::vector<Value>& symbols) const {
    const TreeNode* n = root.get();
    while (n->feature >= 0)
        n = feature_fns[static_cast<size_t>(n->feature)](symbols) ? n->yes.get() : n->no.get();
    return n->leaf_choice;
}

DecisionTree fit_tree(const Plts& plts, const StrategyTable& table, const FeatureSet& fs) {
    DecisionTree tree;
    if (table.slice.empty()) {
        tree.root = std::make_unique<TreeNode>();
        tree.node_count = 1;
        return tree;
    }
    size_t positions = state_symbols(plts, table.slice[0].state, fs).size();
    auto defs = make_features(*plts.model, fs, positions);
    for (auto& d : defs) {
        tree.feature_names.push_back(d.name);
        tree.feature_fns.push_back(d.fn);
    }
    std::vector<ActionLabel> labels;
    std::vector<FitRow> rows;
    for (const auto& p : table.slice) {
        std::vector<Value> symbols = state_symbols(plts, p.state, fs);
        if (symbols.size() != positions)
            throw Error(ErrorKind::Internal, "inconsistent symbol tuple length");
        FitRow row;
        row.bits.reserve(defs.size());
        for (const auto& d : defs) row.bits.push_back(d.fn(symbols) ? 1 : 0);
        size_t li = 0;
        for (; li < labels.size(); ++li)
            if (labels[li] == p.chosen) break;
        if (li == labels.size()) labels.push_back(p.chosen);
        row.label = li;
        rows.push_back(std::move(row));
    }
    std::vector<FitRow*> ptrs;
    for (auto& r : rows) ptrs.push_back(&r);
    tree.root = fit_rec(ptrs, labels, defs.size(), tree.node_count);
    return tree;
}

std::string hold_label(const ActionLabel& label) {
    std::string digits;
    int pos = 0;
    bool any_bool = false;
    for (const auto& a : label.args) {
        if (a.is_bool()) {
            ++pos;
            any_bool = true;
            if (a.as_bool()) digits += std::to_string(pos);
        }
    }
    if (!any_bool) return label.str();
    return digits.empty() ? "holdnone" : "hold" + digits;
}

namespace {

void dot_rec(const TreeNode* n, const DecisionTree& tree, int& counter, std::string& out) {
    int id = counter++;
    if (n->feature < 0) {
        out += "  n" + std::to_string(id) + " [shape=box,label=\"" +
               hold_label(n->leaf_choice) + "\"];\n";
        return;
    }
    out += "  n" + std::to_string(id) + " [label=\"" +
           tree.feature_names[static_cast<size_t>(n->feature)] + "\"];\n";
    int yes_id = counter;
    dot_rec(n->yes.get(), tree, counter, out);
    int no_id = counter;
    dot_rec(n->no.get(), tree, counter, out);
    out += "  n" + std::to_string(id) + " -> n" + std::to_string(yes_id) +
           " [label=\"yes\"];\n";
    out += "  n" + std::to_string(id) + " -> n" + std::to_string(no_id) +
           " [label=\"no\"];\n";
}

}  // namespace

std::string export_tree_dot(const DecisionTree& tree) {
    std::string out = "digraph strategy {\n";
    int counter = 0;
    if (tree.root) dot_rec(tree.root.get(), tree, counter, out);
    out += "}\n";
    return out;
}

std::string export_table_json(const Plts& plts, const StrategyTable& table, bool slice_only) {
    nlohmann::json doc;
    doc["schema"] = "spinspec/strategy/v1";
    doc["model"] = table.model;
    doc["formula"] = table.formula;
    doc["params"] = table.params;
    doc["horizon"] = table.horizon;
    doc["slice_layer"] = table.slice_layer;
    nlohmann::json rows = nlohmann::json::array();
    if (slice_only) {
        for (const auto& p : table.slice) {
            nlohmann::json row;
            row["state"] = p.state;
            row["config"] = plts.state_config(p.state);
            row["horizon"] = p.horizon;
            row["choice"] = p.chosen.str();
            row["value"] = p.value.str();
            rows.push_back(std::move(row));
        }
    } else {
        for (const auto& [key, label] : table.choices) {
            nlohmann::json row;
            row["state"] = key.first;
            row["horizon"] = key.second;
            row["choice"] = label.str();
            rows.push_back(std::move(row));
        }
    }
    doc["decisions"] = std::move(rows);
    return doc.dump(1);
}

std::string export_table_csv(const Plts& plts, const StrategyTable& table) {
    std::string out = "state,horizon,choice,value,config\n";
    for (const auto& p : table.slice) {
        out += std::to_string(p.state) + "," + std::to_string(p.horizon) + "," +
               p.chosen.str() + "," + p.value.str() + ",\"" + plts.state_config(p.state) +
               "\"\n";
    }
    return out;
}

}  // namespace spinspec
