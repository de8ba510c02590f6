// Writes the model-example system specs into the directory given as argv[1].

#include <iostream>
#include <numbers>
#include <string>

#include "dn/example.hpp"
#include "dn/io.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: dn_make_fixtures <dir>\n";
        return 6;
    }
    const std::string dir = argv[1];
    const dn::Sector sector = dn::Sector::avoiding_positive_axis(std::numbers::pi / 6.0);
    struct Item {
        const char* name;
        int n;
        double amplitude;
    };
    for (const Item& it : {Item{"model_n1_a0.json", 1, 0.0}, Item{"model_n1_a1.json", 1, 1.0},
                           Item{"model_n1_a10.json", 1, 10.0}, Item{"model_n2_a0.json", 2, 0.0},
                           Item{"model_n2_a1.json", 2, 1.0}}) {
        const auto sys = dn::example_system(it.n, 1.0, {it.amplitude, {}, 0.5});
        const dn::SystemSpec spec{sys, sector, dn::GridConfig{16, 2.0 * std::numbers::pi}, {}};
        dn::write_text_file(dir + "/" + it.name, dn::dump(dn::to_json(spec)));
    }
    return 0;
}
