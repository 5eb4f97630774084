// Command line surface for the parameter-constancy toolkit: model fitting,
// monitoring paths, constancy tests, null-table management, power studies,
// break diagnosis, and the two built-in synthetic experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "constancy/runner.hpp"

namespace {

using namespace constancy;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw_usage(std::string(what) + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw_usage(std::string(what) + ": empty list");
    return out;
}

Shape parse_shape(const std::string& s) {
    if (s.rfind("jump:", 0) == 0) {
        const auto parts = parse_doubles(s.substr(5), "--shape jump");
        if (parts.size() != 2) throw_usage("--shape jump:<a>,<b>");
        return Shape::jump(parts[0], parts[1]);
    }
    if (s.rfind("trend:", 0) == 0) {
        const auto parts = parse_doubles(s.substr(6), "--shape trend");
        if (parts.size() != 1) throw_usage("--shape trend:<c>");
        return Shape::trend(parts[0]);
    }
    throw_usage("--shape must be jump:<a>,<b> or trend:<c>");
}

struct GlobalOpts {
    std::uint64_t seed = 1;
    std::string standardizer = "expected";
    int windows = 5;
    double epsilon = 0.05;
    long reps = 100000;
    int grid = 1000;
    std::string cache_dir = ".constancy-cache";
    bool no_cache = false;
    std::string output;
};

struct DataOpts {
    std::string family;
    std::string data_file;
    std::string response;
    std::string covariates;
    bool no_intercept = false;
};

void add_data_options(CLI::App* cmd, DataOpts& opts) {
    cmd->add_option("--family", opts.family, "model family id")->required();
    cmd->add_option("--data", opts.data_file, "input CSV file")->required();
    cmd->add_option("--response", opts.response, "response column(s), comma separated")
        ->required();
    cmd->add_option("--covariates", opts.covariates, "covariate columns, comma separated");
    cmd->add_flag("--no-intercept", opts.no_intercept,
                  "do not prepend a constant-1 design column");
}

struct LoadedData {
    std::shared_ptr<const Family> family;
    Dataset dataset;
};

LoadedData load(const DataOpts& opts) {
    ColumnMapping mapping;
    mapping.response = split_list(opts.response);
    if (!opts.covariates.empty()) mapping.covariates = split_list(opts.covariates);
    mapping.add_intercept = !opts.no_intercept;
    const int x_dim =
        static_cast<int>(mapping.covariates.size()) + (mapping.add_intercept ? 1 : 0);
    LoadedData out;
    out.family = make_family(opts.family, x_dim);
    out.dataset = ingest(opts.data_file, mapping, *out.family);
    return out;
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw_data("cannot write '" + file.string() + "'");
    out << text;
}

std::string path_csv_text(const MonitoringPath& path, const std::vector<std::string>& comments) {
    std::ostringstream ss;
    path.write_csv(ss, comments);
    return ss.str();
}

RunConfig make_run_config(const GlobalOpts& g, const std::string& family_id) {
    RunConfig config;
    config.family_id = family_id;
    config.standardizer = standardizer_from_string(g.standardizer);
    config.windows = g.windows;
    config.epsilon = g.epsilon;
    config.grid = g.grid;
    config.reps = g.reps;
    config.seed = g.seed;
    config.cache_dir = g.cache_dir;
    config.no_cache = g.no_cache;
    return config;
}

void emit_run_outputs(const GlobalOpts& g, const Family& family, const RunOutput& output, int n) {
    std::ostringstream report;
    write_report_file(report, family, output, n);
    std::cout << report.str();
    if (!g.output.empty()) {
        std::filesystem::create_directories(g.output);
        const std::filesystem::path dir(g.output);
        write_text_file(dir / "report.txt", report.str());
        write_text_file(dir / "path.csv", path_csv_text(output.path, path_file_comments(output)));
        if (output.weighted_path.has_value()) {
            std::vector<std::string> comments = path_file_comments(output);
            std::string cols = "weighted_components=";
            for (size_t i = 0; i < output.weighted_components.size(); ++i)
                cols += (i ? "," : "") + std::to_string(output.weighted_components[i] + 1);
            comments.push_back(cols);
            write_text_file(dir / "weighted_path.csv",
                            path_csv_text(*output.weighted_path, comments));
        }
    }
}

int run_main(int argc, char** argv) {
    CLI::App app{"tests for constancy of model parameters over an observed sequence"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--standardizer", g.standardizer, "expected | observed | robust")
        ->capture_default_str();
    app.add_option("--windows", g.windows, "window count m for the chi-square tests")
        ->capture_default_str();
    app.add_option("--epsilon", g.epsilon, "trim for the sd-weighted maxima")
        ->capture_default_str();
    app.add_option("--reps", g.reps, "null table replications")->capture_default_str();
    app.add_option("--grid", g.grid, "null table grid size")->capture_default_str();
    app.add_option("--cache-dir", g.cache_dir, "null table cache directory")
        ->capture_default_str();
    app.add_flag("--no-cache", g.no_cache, "disable the null table cache");
    app.add_option("--output", g.output, "output directory (or file, where noted)");

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "maximum likelihood fit");
    DataOpts fit_data;
    add_data_options(fit_cmd, fit_data);
    fit_cmd->callback([&]() {
        LoadedData loaded = load(fit_data);
        const FitResult fit = loaded.family->fit(loaded.dataset.rows);
        std::ostringstream ss;
        write_fit(ss, *loaded.family, fit, loaded.dataset.n());
        std::cout << ss.str();
        if (!g.output.empty()) {
            std::filesystem::create_directories(g.output);
            write_text_file(std::filesystem::path(g.output) / "fit.txt", ss.str());
        }
    });

    // ---- monitor ----
    auto* monitor_cmd = app.add_subcommand("monitor", "write the monitoring path");
    DataOpts monitor_data;
    add_data_options(monitor_cmd, monitor_data);
    std::string plugin;
    monitor_cmd->add_option("--plugin", plugin,
                            "monitor a plug-in functional instead: mean | correlation");
    monitor_cmd->callback([&]() {
        LoadedData loaded = load(monitor_data);
        MonitoringPath path;
        std::vector<std::string> comments;
        char band[64];
        std::snprintf(band, sizeof(band), "band=%.17g", kBridgeBand95);
        comments.push_back(band);
        if (!plugin.empty()) {
            if (plugin == "mean") {
                path = plugin_process(loaded.dataset.rows, MeanEstimator());
            } else if (plugin == "correlation") {
                path = plugin_process(loaded.dataset.rows, CorrelationEstimator());
            } else {
                throw_usage("--plugin must be mean or correlation");
            }
            comments.push_back("standardizer=" + path.standardizer);
        } else {
            const FitResult fit = loaded.family->fit(loaded.dataset.rows);
            const StandardizerChoice std_choice = standardizer_from_string(g.standardizer);
            path = std_choice == StandardizerChoice::robust
                       ? robust_process(loaded.dataset.rows, *loaded.family, fit)
                       : canonical_process(loaded.dataset.rows, *loaded.family, fit,
                                           std_choice == StandardizerChoice::observed
                                               ? InfoChoice::observed
                                               : InfoChoice::expected);
            comments.push_back("standardizer=" + path.standardizer);
        }
        const std::string text = path_csv_text(path, comments);
        std::cout << text;
        if (!g.output.empty()) {
            std::filesystem::create_directories(g.output);
            write_text_file(std::filesystem::path(g.output) / "path.csv", text);
        }
    });

    // ---- test ----
    auto* test_cmd = app.add_subcommand("test", "run constancy tests");
    DataOpts test_data;
    add_data_options(test_cmd, test_data);
    std::string tests = "a2,ks-norm,ks-sum,t-sd,cvm";
    std::string weight = "none";
    std::string shape_arg;
    std::string delta_arg;
    bool with_diagnosis = false;
    test_cmd->add_option("--tests", tests, "comma list: a2,ks-norm,ks-sum,t-sd,cvm,q")
        ->capture_default_str();
    test_cmd->add_option("--weight", weight,
                         "weight for q: trend | jump:<a> | optimal | custom:<file>")
        ->capture_default_str();
    test_cmd->add_option("--shape", shape_arg, "departure shape for --weight optimal");
    test_cmd->add_option("--delta", delta_arg, "departure magnitudes for --weight optimal");
    test_cmd->add_flag("--diagnose", with_diagnosis, "append break-shape diagnosis rows");
    test_cmd->callback([&]() {
        LoadedData loaded = load(test_data);
        RunConfig config = make_run_config(g, loaded.family->id());
        config.tests = split_list(tests);
        config.with_diagnosis = with_diagnosis;
        if (weight == "none") {
            config.weight = RunConfig::WeightChoice::none;
        } else if (weight == "trend") {
            config.weight = RunConfig::WeightChoice::trend;
        } else if (weight.rfind("jump:", 0) == 0) {
            config.weight = RunConfig::WeightChoice::jump;
            config.jump_a = parse_doubles(weight.substr(5), "--weight jump").at(0);
        } else if (weight == "optimal") {
            config.weight = RunConfig::WeightChoice::optimal;
            if (shape_arg.empty() || delta_arg.empty())
                throw_usage("--weight optimal needs --shape and --delta");
            config.departure = DepartureSpec::uniform(parse_doubles(delta_arg, "--delta"),
                                                      parse_shape(shape_arg));
        } else if (weight.rfind("custom:", 0) == 0) {
            config.weight = RunConfig::WeightChoice::custom;
            config.custom_weight_file = weight.substr(7);
        } else {
            throw_usage("unknown --weight '" + weight + "'");
        }
        const RunOutput output = run(config, loaded.dataset, *loaded.family);
        emit_run_outputs(g, *loaded.family, output, loaded.dataset.n());
    });

    // ---- nulltable ----
    auto* table_cmd = app.add_subcommand("nulltable", "build or load a null table");
    std::string functional = "max-abs-bridge";
    int dim = 1;
    std::string table_weight = "trend";
    double jump_a = 0.5;
    table_cmd
        ->add_option("--functional", functional,
                     "max-abs-bridge | max-sq-norm | sum-max-abs | max-abs-sd-weighted | cvm | "
                     "max-abs-weighted")
        ->capture_default_str();
    table_cmd->add_option("--dim", dim, "component count p")->capture_default_str();
    table_cmd->add_option("--weight", table_weight, "weighted functional: trend | jump")
        ->capture_default_str();
    table_cmd->add_option("--jump-a", jump_a, "break position for the jump weight")
        ->capture_default_str();
    table_cmd->callback([&]() {
        FunctionalSpec spec;
        if (functional == "max-abs-bridge") {
            spec = FunctionalSpec::max_abs_bridge();
        } else if (functional == "max-sq-norm") {
            spec = FunctionalSpec::max_sq_norm(dim);
        } else if (functional == "sum-max-abs") {
            spec = FunctionalSpec::sum_max_abs(dim);
        } else if (functional == "max-abs-sd-weighted") {
            spec = FunctionalSpec::max_abs_sd_weighted(g.epsilon);
        } else if (functional == "cvm") {
            spec = FunctionalSpec::cvm(dim);
        } else if (functional == "max-abs-weighted") {
            spec = table_weight == "trend" ? FunctionalSpec::max_abs_weighted_trend()
                                           : FunctionalSpec::max_abs_weighted_jump(jump_a);
        } else {
            throw_usage("unknown functional '" + functional + "'");
        }
        NullTableCache cache(g.no_cache ? "" : g.cache_dir);
        const NullTable table = cache.get_or_build(spec, g.grid, g.reps, g.seed);
        std::ostringstream ss;
        ss << "nulltable key=" << table.cache_key() << "\n";
        char line[96];
        for (double q : {0.5, 0.9, 0.95, 0.99}) {
            std::snprintf(line, sizeof(line), "quantile p=%g value=%.17g\n", q, table.quantile(q));
            ss << line;
        }
        std::cout << ss.str();
        if (!g.output.empty()) {
            std::filesystem::create_directories(g.output);
            write_text_file(std::filesystem::path(g.output) / "nulltable.txt", ss.str());
        }
    });

    // ---- power ----
    auto* power_cmd = app.add_subcommand("power", "empirical and predicted power");
    std::string power_family;
    std::string theta0_arg;
    std::string power_shape;
    std::string deltas_arg;
    std::string power_test = "a2";
    int power_n = 500;
    double level = 0.05;
    int component = 1;
    double power_jump_a = 0.5;
    power_cmd->add_option("--family", power_family, "model family id")->required();
    power_cmd->add_option("--theta0", theta0_arg, "null parameter values, comma separated")
        ->required();
    power_cmd->add_option("--shape", power_shape, "departure shape: jump:<a>,<b> | trend:<c>")
        ->required();
    power_cmd->add_option("--deltas", deltas_arg, "delta magnitudes, comma separated")
        ->required();
    power_cmd
        ->add_option("--test", power_test,
                     "a2 | q-optimal | q-trend | q-jump | max-m | max-v-trend | max-v-jump | "
                     "max-v-optimal")
        ->capture_default_str();
    power_cmd->add_option("--n", power_n, "sample size per replication")->capture_default_str();
    power_cmd->add_option("--level", level, "test level")->capture_default_str();
    power_cmd->add_option("--component", component, "component for the max tests")
        ->capture_default_str();
    power_cmd->add_option("--jump-a", power_jump_a, "break position for the jump weight")
        ->capture_default_str();
    power_cmd->callback([&]() {
        const auto family = make_family(power_family, 2);
        const std::vector<double> theta0 = parse_doubles(theta0_arg, "--theta0");
        const Shape shape = parse_shape(power_shape);
        const std::vector<double> deltas = parse_doubles(deltas_arg, "--deltas");

        TestSelector selector;
        selector.windows = g.windows;
        selector.component = component;
        selector.jump_a = power_jump_a;
        if (power_test == "a2") {
            selector.kind = TestSelector::Kind::chi2_window;
        } else if (power_test == "q-optimal") {
            selector.kind = TestSelector::Kind::weighted_chi2;
            selector.weight = TestSelector::Weight::optimal;
        } else if (power_test == "q-trend") {
            selector.kind = TestSelector::Kind::weighted_chi2;
            selector.weight = TestSelector::Weight::trend;
        } else if (power_test == "q-jump") {
            selector.kind = TestSelector::Kind::weighted_chi2;
            selector.weight = TestSelector::Weight::jump;
        } else if (power_test == "max-m") {
            selector.kind = TestSelector::Kind::max_component;
        } else if (power_test == "max-v-trend") {
            selector.kind = TestSelector::Kind::max_weighted;
            selector.weight = TestSelector::Weight::trend;
        } else if (power_test == "max-v-jump") {
            selector.kind = TestSelector::Kind::max_weighted;
            selector.weight = TestSelector::Weight::jump;
        } else if (power_test == "max-v-optimal") {
            selector.kind = TestSelector::Kind::max_weighted;
            selector.weight = TestSelector::Weight::optimal;
        } else {
            throw_usage("unknown --test '" + power_test + "'");
        }

        std::ostringstream ss;
        ss << "delta,shape,test,n,level,empirical_power,predicted_power,mc_se\n";
        const int p = family->param_dim();
        for (double d : deltas) {
            std::vector<double> delta(p, 0.0);
            delta[component - 1] = d;
            const DepartureSpec spec = DepartureSpec::uniform(delta, shape);
            const PowerResult res = empirical_power(*family, theta0, spec, selector, power_n,
                                                    g.reps, g.seed, level);
            char line[256];
            std::snprintf(line, sizeof(line), "%.17g,%s,%s,%d,%g,%.17g,%.17g,%.17g\n", d,
                          shape.to_string().c_str(), selector.name().c_str(), power_n, level,
                          res.empirical_power, res.predicted_power, res.mc_se);
            ss << line;
        }
        std::cout << ss.str();
        if (!g.output.empty()) {
            std::filesystem::create_directories(g.output);
            write_text_file(std::filesystem::path(g.output) / "power.csv", ss.str());
        }
    });

    // ---- diagnose ----
    auto* diag_cmd = app.add_subcommand("diagnose", "break-shape diagnosis of a path file");
    std::string path_file;
    diag_cmd->add_option("--path", path_file, "path CSV produced by monitor/test")->required();
    diag_cmd->callback([&]() {
        std::ifstream in(path_file);
        if (!in) throw_data("cannot open '" + path_file + "'");
        const MonitoringPath path = MonitoringPath::read_csv(in);
        std::ostringstream ss;
        for (const auto& d : diagnose(path)) d.write(ss);
        std::cout << ss.str();
        if (!g.output.empty()) {
            std::filesystem::create_directories(g.output);
            write_text_file(std::filesystem::path(g.output) / "diagnosis.txt", ss.str());
        }
    });

    // ---- illustrate ----
    auto* ill_cmd = app.add_subcommand("illustrate", "rebuild a built-in synthetic experiment");
    int which = 1;
    ill_cmd->add_option("--which", which, "1 (gamma break) or 2 (regression sd trend)")
        ->capture_default_str();
    ill_cmd->callback([&]() {
        RunConfig config = make_run_config(g, "");
        const Illustration ill = simulate_illustration(which, g.seed, config);
        const auto family =
            make_family(ill.data.family_id, ill.data.family_id == "normreg" ? 2 : 0);
        std::ostringstream data_csv;
        ill.data.write_csv(data_csv);
        emit_run_outputs(g, *family, ill.output, ill.data.n());
        if (!g.output.empty()) {
            const std::filesystem::path dir(g.output);
            write_text_file(dir / ("illustration" + std::to_string(which) + "_data.csv"),
                            data_csv.str());
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const constancy::Error& e) {
        // single line: error: <code>: <message>
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
}
