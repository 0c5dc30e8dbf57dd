// Command-line front end for idxdens.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "idxdens/idxdens.hpp"

using namespace idxdens;
using pipeline::json;

namespace {

struct Overrides {
    std::string config;
    std::string output;
    std::string degree_mode;
    std::string method;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t sieve_bound = 0;
    bool resume = false;
};

config::RunConfig load(const Overrides& o) {
    json j;
    {
        std::ifstream in(o.config);
        if (!in) throw config::ConfigError("cannot open config file " + o.config);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw config::ConfigError("config is not valid JSON: " + std::string(e.what()));
        }
    }
    if (!o.output.empty()) j["output"] = o.output;
    if (!o.degree_mode.empty()) j["degree_mode"] = o.degree_mode;
    if (!o.method.empty()) j["method"] = o.method;
    if (o.threads) j["threads"] = o.threads;
    if (o.seed_set) j["seed"] = o.seed;
    if (o.sieve_bound) j["sieve"]["bound"] = o.sieve_bound;
    if (o.resume) j["sieve"]["resume"] = true;
    return config::parse_config(j);
}

int emit(const config::RunConfig& cfg, const json& result) {
    pipeline::write_output(cfg, result);
    std::cout << pipeline::dump(result);
    return pipeline::kOk;
}

void print_examples(const json& rows) {
    std::printf("%-36s %-11s %-29s %-24s %s\n", "example", "method", "analytic [lower, upper]", "empirical (hits/total)",
                "verdict");
    for (const auto& r : rows) {
        char analytic[64] = "-";
        if (r.contains("analytic"))
            std::snprintf(analytic, sizeof analytic, "[%.6f, %.6f]", r["analytic"]["lower"].get<double>(),
                          r["analytic"]["upper"].get<double>());
        char emp[64];
        std::snprintf(emp, sizeof emp, "%.6f (%llu/%llu)", r["empirical"]["estimate"].get<double>(),
                      static_cast<unsigned long long>(r["empirical"]["hits"].get<std::uint64_t>()),
                      static_cast<unsigned long long>(r["empirical"]["total"].get<std::uint64_t>()));
        std::printf("%-36s %-11s %-29s %-24s %s\n", r["example"].get<std::string>().c_str(),
                    r["method"].get<std::string>().c_str(), analytic, emp, r["verdict"].get<std::string>().c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Densities of primes classified by the index map p -> (Ind_p(W_1), ..., Ind_p(W_n)).\n"
                 "Results are JSON on stdout and in the configured output file.\n"
                 "Exit codes: 0 ok, 1 internal error, 2 config error, 3 unsupported request,\n"
                 "4 inconsistent compare verdict, 5 inconclusive.\n"
                 "Environment: IDXDENS_CACHE_DIR persists measured Kummer deficiencies."};
    app.require_subcommand(1);
    Overrides o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", o.output, "result file (overrides 'output')");
        sub->add_option("-t,--threads", o.threads, "worker threads (overrides 'threads')");
    };

    auto* degree = app.add_subcommand("degree", "degree of Q(zeta_m, W_I^{1/n_I}) in generic or corrected mode");
    add_common(degree);
    degree->add_option("--degree-mode", o.degree_mode, "generic or corrected")->check(CLI::IsMember({"generic", "corrected"}));

    auto* artin_cmd = app.add_subcommand("artin", "Artin-type Euler product with a certified interval");
    add_common(artin_cmd);

    auto* oracle = app.add_subcommand("artin-oracle", "local factor F against the random-variable model");
    add_common(oracle);
    oracle->add_option("--seed", o.seed, "Monte Carlo seed")->each([&](const std::string&) { o.seed_set = true; });

    auto* dens = app.add_subcommand("density", "analytic density of the configured index set");
    add_common(dens);
    dens->add_option("--method", o.method, "auto, series, euler or singletons")
        ->check(CLI::IsMember({"auto", "series", "euler", "singletons"}));
    dens->add_option("--degree-mode", o.degree_mode, "generic or corrected")->check(CLI::IsMember({"generic", "corrected"}));

    auto* survey = app.add_subcommand("survey", "sieve primes and count index tuples in the set");
    add_common(survey);
    survey->add_option("--sieve-bound", o.sieve_bound, "largest prime to scan");
    survey->add_flag("--resume", o.resume, "continue an existing observation log");

    auto* cmp = app.add_subcommand("compare", "analytic density against a sieve survey");
    add_common(cmp);
    cmp->add_option("--method", o.method, "auto, series, euler or singletons")
        ->check(CLI::IsMember({"auto", "series", "euler", "singletons"}));
    cmp->add_option("--degree-mode", o.degree_mode, "generic or corrected")->check(CLI::IsMember({"generic", "corrected"}));
    cmp->add_option("--sieve-bound", o.sieve_bound, "largest prime to scan");
    cmp->add_flag("--resume", o.resume, "continue an existing observation log");

    auto* classify = app.add_subcommand("classify", "taxonomy of the index set (cut, almost cut, determined)");
    add_common(classify);

    auto* examples = app.add_subcommand("paper-examples", "run the bundled reproductions and print a table");
    std::uint64_t ex_bound = 1'000'000;
    unsigned ex_threads = 1;
    std::string ex_output;
    examples->add_option("--sieve-bound", ex_bound, "largest prime to scan")->capture_default_str();
    examples->add_option("-t,--threads", ex_threads, "worker threads")->capture_default_str();
    examples->add_option("-o,--output", ex_output, "JSON result file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (examples->parsed()) {
            const json rows = pipeline::paper_examples(ex_bound, ex_threads);
            if (!ex_output.empty()) {
                config::RunConfig cfg;
                cfg.output = ex_output;
                pipeline::write_output(cfg, rows);
            }
            print_examples(rows);
            return pipeline::kOk;
        }
        const auto cfg = load(o);
        if (degree->parsed()) return emit(cfg, pipeline::run_degree(cfg));
        if (artin_cmd->parsed()) return emit(cfg, pipeline::run_artin(cfg));
        if (oracle->parsed()) return emit(cfg, pipeline::run_oracle(cfg));
        if (dens->parsed()) return emit(cfg, pipeline::run_density(cfg));
        if (survey->parsed()) return emit(cfg, pipeline::run_survey(cfg));
        if (classify->parsed()) return emit(cfg, pipeline::run_classify(cfg));
        if (cmp->parsed()) {
            auto [result, verdict] = pipeline::run_compare(cfg);
            emit(cfg, result);
            if (verdict == report::Verdict::Inconsistent) return pipeline::kInconsistent;
            if (verdict == report::Verdict::Inconclusive) return pipeline::kInconclusive;
            return pipeline::kOk;
        }
    } catch (const UnsupportedError& e) {
        std::cerr << "idxdens: " << e.what() << "\n";
        return pipeline::kUnsupported;
    } catch (const InconclusiveError& e) {
        std::cerr << "idxdens: " << e.what() << "\n";
        return pipeline::kInconclusive;
    } catch (const ParseError& e) {
        std::cerr << "idxdens: config error: " << e.what() << "\n";
        return pipeline::kConfigError;
    } catch (const FactorizationError& e) {
        std::cerr << "idxdens: config error: " << e.what() << "\n";
        return pipeline::kConfigError;
    } catch (const PreconditionError& e) {
        std::cerr << "idxdens: config error: " << e.what() << "\n";
        return pipeline::kConfigError;
    } catch (const LimitError& e) {
        std::cerr << "idxdens: config error: " << e.what() << "\n";
        return pipeline::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "idxdens: internal error: " << e.what() << "\n";
        return pipeline::kInternal;
    }
    return pipeline::kInternal;
}
