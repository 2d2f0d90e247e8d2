#include <iostream>
#include <cstdlib>
#include "spinspec/models.hpp"
#include "spinspec/explore.hpp"
#include "spinspec/quantcheck.hpp"
#include "spinspec/printer.hpp"

using namespace spinspec;
int main(int argc, char** argv) {
    std::string model_name = argc > 1 ? argv[1] : "one_column";
    std::string formula_name = argc > 2 ? argv[2] : "formula1";
    try {
        ModelPtr m = load_model(model_name);
        std::cout << "parsed+validated " << model_name << "\n";
        auto plts = explore(m);
        auto st = stats(*plts);
        std::cout << st.str() << "\n";
        if (std::getenv("SMOKE_DUMP")) std::cout << dump_plts(*plts);
        auto f = load_formula(formula_name, *m);
        EvalOptions opts;
        if (argc > 3) opts.params["max_rounds"] = Value(Int(std::string(argv[3])));
        auto r = evaluate(*plts, *f, opts);
        std::cout << formula_name << " = " << r.value.str() << " (" << r.value.decimal(4)
                  << ") sweeps=" << r.stats.sweeps << " vars=" << r.stats.variables << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
