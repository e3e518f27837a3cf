#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "infomarket/error.hpp"
#include "infomarket/io/commands.hpp"

namespace {

namespace io = infomarket::io;

enum Exit : int {
    ok = 0,
    failure = 1,
    usage = 2,
    config = 3,
    malformed = 4,
    missing = 5,
    degenerate = 6,
    range = 7,
};

struct Raw {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string format = "csv";
};

void add_common(CLI::App& cmd, Raw& raw) {
    cmd.add_option("--config", raw.config, "INI configuration file")->check(CLI::ExistingFile);
    cmd.add_option("--seed", raw.seed, "Seed; overrides [market] seed");
    cmd.add_option("--out", raw.out, "Output directory")->capture_default_str();
    cmd.add_option("--format", raw.format, "Table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

io::CommonOptions common(const Raw& raw) {
    io::CommonOptions o;
    if (!raw.config.empty()) o.config = raw.config;
    o.seed = raw.seed;
    o.out = raw.out;
    o.format = raw.format == "json" ? io::Format::json : io::Format::csv;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Information-driven market simulator and estimators"};
    app.set_version_flag("--version", std::string(io::kToolVersion));
    app.require_subcommand(1);

    Raw sim_raw, sweep_raw, stats_raw, bounds_raw, compare_raw;
    std::size_t threads = 1;
    std::string input, empirical;
    io::BoundsOptions bounds_opts;
    std::optional<std::size_t> dimension;

    auto* sim = app.add_subcommand("simulate", "Run one market and write series, CCDF, ACF and summary");
    add_common(*sim, sim_raw);

    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid (or alpha scan) from [sweep]");
    add_common(*sweep, sweep_raw);
    sweep->get_option("--config")->required();
    sweep->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024))->capture_default_str();

    auto* st = app.add_subcommand("stats", "Re-analyse a stored series file");
    add_common(*st, stats_raw);
    st->add_option("--input", input, "Series file written by simulate")->required()->check(CLI::ExistingFile);

    auto* bnd = app.add_subcommand("bounds", "Tabulate analytic variance bounds against alpha");
    add_common(*bnd, bounds_raw);
    auto* dim_opt = bnd->add_option("--dimension", dimension, "Number of information states D");
    dim_opt->excludes(bnd->get_option("--config"));
    bnd->add_option("--alpha-min", bounds_opts.alpha_min)->capture_default_str();
    bnd->add_option("--alpha-max", bounds_opts.alpha_max)->capture_default_str();
    bnd->add_option("--per-octave", bounds_opts.per_octave, "Grid points per doubling of alpha")
        ->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "Model run against an empirical date/close file");
    add_common(*cmp, compare_raw);
    cmp->add_option("--empirical", empirical, "Two-column date/close file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::usage;
    }

    try {
        if (*sim) {
            io::simulate(common(sim_raw));
        } else if (*sweep) {
            io::run_sweep_command(common(sweep_raw), threads);
        } else if (*st) {
            io::analyze_series_file(common(stats_raw), input);
        } else if (*bnd) {
            bounds_opts.dimension = dimension;
            io::bounds(common(bounds_raw), bounds_opts);
        } else if (*cmp) {
            io::compare(common(compare_raw), empirical);
        }
    } catch (const infomarket::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return Exit::config;
    } catch (const infomarket::FormatError& e) {
        std::cerr << "malformed input: " << e.what() << "\n";
        return Exit::malformed;
    } catch (const infomarket::ResourceError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return Exit::missing;
    } catch (const infomarket::DegenerateInputError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return Exit::degenerate;
    } catch (const infomarket::SampleSizeError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return Exit::degenerate;
    } catch (const infomarket::RangeError& e) {
        std::cerr << "out of range: " << e.what() << "\n";
        return Exit::range;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::failure;
    }
    return Exit::ok;
}
