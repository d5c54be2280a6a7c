// bopinn command-line entry point.
//
//   bopinn run      --config <file> [--case c] [--runs k] [--scale desk|paper]
//                   [--forward pinn|analytic] [--seed n] [--out dir] [--<key> value ...]
//   bopinn snapshot --c <c> --out <file> [...]
//   bopinn field    --c <c> --out <file> [--config <file>] [...]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <bopinn/harness.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

bopinn::ExperimentConfig resolve_config(const std::string& config_path,
                                        const std::map<std::string, std::string>& overrides) {
    bopinn::KeyValues kv;
    if (!config_path.empty()) kv = bopinn::read_config_file(config_path);
    for (const auto& [k, v] : overrides) kv[k] = v;
    return bopinn::build_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wave-speed inversion from a noisy displacement snapshot"};
    app.require_subcommand(1);

    // Values captured from the command line, keyed by config key.
    std::map<std::string, std::string> run_overrides;
    std::map<std::string, std::string> field_overrides;
    std::string run_config, field_config;

    auto* run = app.add_subcommand("run", "Run the inversion experiment over all cases");
    run->add_option("--config", run_config, "Config file (key = value)")->check(CLI::ExistingFile);
    const std::map<std::string, std::string> aliases = {
        {"--case", "cases"}, {"--runs", "runs"},       {"--scale", "scale"},
        {"--forward", "forward_mode"}, {"--seed", "seed_base"}, {"--out", "out_dir"},
    };
    for (const auto& [flag, key] : aliases)
        run->add_option_function<std::string>(flag, [&run_overrides, key = key](const std::string& v) {
            run_overrides[key] = v;
        }, "Sets '" + key + "'");
    for (const auto& key : bopinn::config_keys()) {
        if (aliases.contains("--" + key)) continue;
        run->add_option_function<std::string>("--" + key, [&run_overrides, key](const std::string& v) {
            run_overrides[key] = v;
        }, "Config key override")->group("Config keys");
    }

    double snap_c = 0.0, snap_t = 0.25, snap_snr = 36.34, snap_len = 1.0, snap_hor = 1.0;
    std::size_t snap_n = 256;
    std::uint64_t snap_seed = 1;
    std::string snap_out;
    bool snap_clean = false;
    auto* snap = app.add_subcommand("snapshot", "Write a synthetic observation file");
    snap->add_option("--c", snap_c, "Scaled wave speed in [0.1, 1]")->required();
    snap->add_option("--t-obs", snap_t, "Observation time");
    snap->add_option("--sensors", snap_n, "Number of sensors");
    snap->add_option("--snr", snap_snr, "Signal-to-noise ratio in dB");
    snap->add_flag("--clean", snap_clean, "Write the noiseless field");
    snap->add_option("--seed", snap_seed, "Noise seed");
    snap->add_option("--length", snap_len, "Domain length L");
    snap->add_option("--horizon", snap_hor, "Time horizon T");
    snap->add_option("--out", snap_out, "Output CSV")->required();

    double field_c = 0.0;
    std::uint64_t field_seed = 1;
    std::size_t field_nx = 101, field_nt = 101;
    std::string field_out;
    auto* field = app.add_subcommand("field", "Train one PINN and export its field on a grid");
    field->add_option("--c", field_c, "Scaled wave speed in [0.1, 1]")->required();
    field->add_option("--config", field_config, "Config file supplying pinn.* and domain.* keys")
        ->check(CLI::ExistingFile);
    field->add_option_function<std::string>("--scale", [&](const std::string& v) { field_overrides["scale"] = v; },
                                            "desk or paper");
    field->add_option("--seed", field_seed, "Training seed");
    field->add_option("--nx", field_nx, "Grid points in x");
    field->add_option("--nt", field_nt, "Grid points in t");
    field->add_option("--out", field_out, "Grid CSV path; slices and parameters go alongside")->required();
    for (const auto& key : bopinn::config_keys())
        if (key.starts_with("pinn.") || key.starts_with("domain."))
            field->add_option_function<std::string>("--" + key, [&field_overrides, key](const std::string& v) {
                field_overrides[key] = v;
            }, "Config key override")->group("Config keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) {
            const auto cfg = resolve_config(run_config, run_overrides);
            const auto res = bopinn::run_all(cfg);
            std::cout << res.table;
            for (const auto& s : res.summaries)
                if (!s.warning.empty()) std::cerr << "c_true=" << s.c_true << ": " << s.warning << '\n';
            std::cout << "wrote " << (cfg.out_dir / "summary.csv").string() << '\n';
        } else if (*snap) {
            const bopinn::WaveDomain domain(snap_len, snap_hor);
            const double snr = snap_clean ? std::numeric_limits<double>::infinity() : snap_snr;
            const auto s = bopinn::make_snapshot(bopinn::WaveSpeed(snap_c), snap_t, snap_n, snr, snap_seed, domain);
            bopinn::write_snapshot(snap_out, s);
            std::cout << "wrote " << snap_out << '\n';
        } else if (*field) {
            const auto cfg = resolve_config(field_config, field_overrides);
            const auto p = bopinn::pinn_forward(cfg, field_seed);
            const auto colloc =
                bopinn::sample_collocation(cfg.domain, p.n_f, p.n_0, p.n_b, p.collocation_seed);
            const auto trained = bopinn::train_pinn(bopinn::WaveSpeed(field_c), colloc, p.train, p.init_seed);
            const std::filesystem::path out(field_out);
            for (const auto& path : bopinn::export_field(trained, cfg.domain, field_nx, field_nt, out))
                std::cout << "wrote " << path.string() << '\n';
            const auto params_path = out.parent_path() / (out.stem().string() + "_params.txt");
            bopinn::save_trained_field(params_path, trained);
            std::cout << "wrote " << params_path.string() << '\n'
                      << "loss " << trained.final_loss.j_total << " after " << trained.trace.iterations
                      << " iterations (" << bopinn::to_string(trained.trace.termination_reason) << ")\n"
                      << "relative L2 error vs analytic: "
                      << bopinn::relative_l2_error(trained.params, bopinn::WaveSpeed(field_c), cfg.domain) << '\n';
        }
    } catch (const bopinn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const bopinn::DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
