// Command-line surface: gen | train | eval | gradcheck.
// Exit codes: 0 success, 1 config/data error, 2 shape error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esn/dataio.hpp"
#include "esn/error.hpp"
#include "esn/gradcheck.hpp"
#include "esn/trainer.hpp"

namespace {

struct GenOpts {
    std::size_t classes = 5;
    std::size_t dim = 10;
    std::size_t length = 20000;
    double memory = 0.5;
    double noise = 0.5;
    std::uint64_t seed = 1;
    std::string out = "frames.txt";
};

struct TrainOpts {
    std::string data, split;  // single file + "train,valid,test" frame counts
    std::string train_path, valid_path, test_path;
    std::string mode = "fixed";
    std::size_t depth = 1;
    std::size_t hidden = 100;
    std::size_t epochs = 20;
    std::size_t washout = 50;
    std::size_t context = 1;
    double lambda = 3.9;
    double alpha = 0.07;
    double mu = 1e-8;
    double density = 0.02;
    double input_scale = 0.1;
    double clip = 10.0;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string model_out = "model.bin";
    std::string report = "report.tsv";
};

struct EvalOpts {
    std::string model, data;
    std::size_t washout = 50;
    std::size_t context = 1;
};

struct GradcheckOpts {
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    std::vector<std::size_t> depths = {1, 2, 3};
};

int run_gen(const GenOpts& o) {
    esn::FrameDataset ds = esn::gen_synthetic(o.classes, o.dim, o.length, o.memory, o.seed, o.noise);
    esn::save_frames(ds, o.out);
    std::cout << "wrote " << ds.size() << " frames (" << ds.num_classes << " classes, dim "
              << ds.feature_dim() << ") to " << o.out << "\n";
    return 0;
}

std::vector<std::size_t> parse_split(const std::string& spec) {
    std::vector<std::size_t> counts;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t comma = std::min(spec.find(',', pos), spec.size());
        std::size_t used = 0;
        const std::string tok = spec.substr(pos, comma - pos);
        long long v = -1;
        try {
            v = std::stoll(tok, &used);
        } catch (const std::exception&) {}
        if (used != tok.size() || v < 0) throw esn::DataError("--split: bad count '" + tok + "'");
        counts.push_back(static_cast<std::size_t>(v));
        pos = comma + 1;
    }
    if (counts.size() != 3) throw esn::DataError("--split expects three counts: train,valid,test");
    return counts;
}

int run_train(const TrainOpts& o) {
    esn::FrameDataset train, valid, test;
    bool have_test = false;
    if (!o.data.empty()) {
        if (o.split.empty()) throw esn::DataError("--data requires --split train,valid,test");
        esn::FrameDataset all = esn::load_frames(o.data);
        const std::vector<std::size_t> counts = parse_split(o.split);
        if (counts[0] + counts[1] + counts[2] > all.size())
            throw esn::DataError("--split counts exceed dataset size");
        train = esn::slice_frames(all, 0, counts[0]);
        valid = esn::slice_frames(all, counts[0], counts[1]);
        if (counts[2] > 0) {
            test = esn::slice_frames(all, counts[0] + counts[1], counts[2]);
            have_test = true;
        }
    } else {
        if (o.train_path.empty() || o.valid_path.empty())
            throw esn::DataError("need --data/--split or --train and --valid");
        train = esn::load_frames(o.train_path);
        valid = esn::load_frames(o.valid_path);
        if (!o.test_path.empty()) {
            test = esn::load_frames(o.test_path);
            have_test = true;
        }
    }
    if (o.context > 1) {
        train = esn::window_context(train, o.context);
        valid = esn::window_context(valid, o.context);
        if (have_test) test = esn::window_context(test, o.context);
    }

    esn::EsnConfig cfg;
    cfg.input_dim = train.feature_dim();
    cfg.hidden_dim = o.hidden;
    cfg.output_dim = train.num_classes;
    cfg.lambda = o.lambda;
    cfg.mu = o.mu;
    cfg.alpha = o.alpha;
    cfg.bptt_depth = o.depth;
    cfg.washout = o.washout;
    cfg.density = o.density;
    cfg.input_scale = o.input_scale;
    cfg.clip_threshold = o.clip;
    cfg.seed = o.seed;
    cfg.validate();

    const esn::LearnMode mode = esn::parse_mode(o.mode);
    esn::FitResult result = esn::fit(train, valid, cfg, mode, o.epochs);

    esn::save_model(result.params, cfg.lambda, cfg.mu, o.model_out);
    std::ofstream rep(o.report);
    if (!rep) throw esn::DataError("cannot open report file: " + o.report);
    rep << esn::TrainReport::header() << "\n";
    for (const auto& row : result.report.rows) rep << esn::TrainReport::line(row) << "\n";

    const auto& last = result.report.rows.back();
    std::printf("final train_error %.17g valid_error %.17g\n", last.train_error, last.valid_error);
    std::printf("best valid_error %.17g\n", result.best_valid_error);
    if (have_test)
        std::printf("test_error %.17g\n", esn::evaluate(result.params, test, cfg.washout));
    return 0;
}

int run_eval(const EvalOpts& o) {
    esn::LoadedModel model = esn::load_model(o.model);
    esn::FrameDataset ds = esn::load_frames(o.data);
    if (o.context > 1) ds = esn::window_context(ds, o.context);
    if (ds.feature_dim() != model.params.input_dim())
        throw esn::ShapeError("eval: dataset dim " + std::to_string(ds.feature_dim()) +
                              " does not match model input dim " +
                              std::to_string(model.params.input_dim()));
    std::printf("frame_error %.17g\n", esn::evaluate(model.params, ds, o.washout));
    return 0;
}

// Expands "key=value" config lines into "--key value" tokens. Inserted ahead
// of the real command-line flags, so those always win; unknown keys surface
// as unknown flags.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw esn::DataError("cannot open config file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::size_t eq = line.find('=', first);
        if (eq == std::string::npos)
            throw esn::DataError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r");
            const std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(first, eq - first));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw esn::DataError(path + ":" + std::to_string(lineno) + ": empty key");
        tokens.push_back("--" + key);
        tokens.push_back(value);
    }
    return tokens;
}

int run_gradcheck(const GradcheckOpts& o) {
    bool all_pass = true;
    for (std::size_t depth : o.depths)
        for (std::size_t hidden : {std::size_t{6}, std::size_t{8}})
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                esn::FdInstance inst = esn::make_fd_instance(3, hidden, 2, 10, depth, 0.4, seed);
                esn::FdReport rin = esn::fd_check_input(inst, o.epsilon, o.tolerance);
                esn::FdReport rrec = esn::fd_check_recurrent(inst, o.epsilon, o.tolerance);
                std::printf("depth %zu h %zu seed %llu  input max_rel %.3e %s  recurrent max_rel %.3e %s\n",
                            depth, hidden, static_cast<unsigned long long>(seed),
                            rin.max_rel_error, rin.pass ? "pass" : "FAIL",
                            rrec.max_rel_error, rrec.pass ? "pass" : "FAIL");
                if (!rin.pass) {
                    all_pass = false;
                    std::cout << rin.to_text();
                }
                if (!rrec.pass) {
                    all_pass = false;
                    std::cout << rrec.to_text();
                }
            }
    std::cout << (all_pass ? "gradcheck: all instances passed\n"
                           : "gradcheck: FAILURES above\n");
    return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echo state network trainer with analytic recurrent gradients"};
    app.require_subcommand(1);

    GenOpts g;
    CLI::App* gen = app.add_subcommand("gen", "write a synthetic frame classification dataset");
    gen->add_option("--classes", g.classes, "number of classes")->capture_default_str();
    gen->add_option("--dim", g.dim, "feature dimension")->capture_default_str();
    gen->add_option("--length", g.length, "number of frames")->capture_default_str();
    gen->add_option("--memory", g.memory, "previous-class carryover strength")->capture_default_str();
    gen->add_option("--noise", g.noise, "emission noise sigma")->capture_default_str();
    gen->add_option("--seed", g.seed, "generator seed")->capture_default_str();
    gen->add_option("--out", g.out, "output path")->capture_default_str();

    TrainOpts t;
    CLI::App* train = app.add_subcommand("train", "train a network and write model + epoch report");
    train->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    train->add_option("--config", config_path, "key=value config file; flags override it");
    train->add_option("--data", t.data, "single dataset split by --split")->capture_default_str();
    train->add_option("--split", t.split, "train,valid,test frame counts for --data")->capture_default_str();
    train->add_option("--train", t.train_path, "training dataset path")->capture_default_str();
    train->add_option("--valid", t.valid_path, "validation dataset path")->capture_default_str();
    train->add_option("--test", t.test_path, "optional test dataset path")->capture_default_str();
    train->add_option("--mode", t.mode, "fixed | learn-w | learn-w-wrec")->capture_default_str();
    train->add_option("--depth", t.depth, "gradient truncation depth n")->capture_default_str();
    train->add_option("--hidden", t.hidden, "reservoir size")->capture_default_str();
    train->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    train->add_option("--washout", t.washout, "discarded leading frames per utterance")->capture_default_str();
    train->add_option("--context", t.context, "context window width (odd)")->capture_default_str();
    train->add_option("--lambda", t.lambda, "recurrent spectral radius")->capture_default_str();
    train->add_option("--alpha", t.alpha, "learning rate")->capture_default_str();
    train->add_option("--mu", t.mu, "ridge regularizer")->capture_default_str();
    train->add_option("--density", t.density, "recurrent connection density")->capture_default_str();
    train->add_option("--input-scale", t.input_scale, "input weight scale")->capture_default_str();
    train->add_option("--clip", t.clip, "gradient clipping threshold")->capture_default_str();
    train->add_option("--seed", t.seed, "initialization seed")->capture_default_str();
    train->add_option("--threads", t.threads, "worker threads (1 = bitwise-reproducible)")->capture_default_str();
    train->add_option("--model-out", t.model_out, "model output path")->capture_default_str();
    train->add_option("--report", t.report, "per-epoch report path (tab-delimited)")->capture_default_str();

    EvalOpts e;
    CLI::App* eval = app.add_subcommand("eval", "print frame error of a saved model on a dataset");
    eval->add_option("--model", e.model, "model path")->required();
    eval->add_option("--data", e.data, "dataset path")->required();
    eval->add_option("--washout", e.washout, "discarded leading frames per utterance")->capture_default_str();
    eval->add_option("--context", e.context, "context window width (odd)")->capture_default_str();

    GradcheckOpts gc;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    gradcheck->add_option("--epsilon", gc.epsilon, "central-difference step")->capture_default_str();
    gradcheck->add_option("--tolerance", gc.tolerance, "max relative error accepted")->capture_default_str();
    gradcheck->add_option("--depth", gc.depths, "truncation depths to check")->capture_default_str();

    // Splice config-file keys in as flags just after the subcommand name, so
    // anything given on the real command line takes precedence (take-last).
    std::vector<std::string> args(argv, argv + argc);
    try {
        for (std::size_t i = 1; i < args.size(); ++i) {
            if (args[i] != "train") continue;
            for (std::size_t j = i + 1; j < args.size(); ++j) {
                std::string path;
                if (args[j] == "--config" && j + 1 < args.size()) path = args[j + 1];
                else if (args[j].rfind("--config=", 0) == 0) path = args[j].substr(9);
                else continue;
                const std::vector<std::string> extra = config_tokens(path);
                args.insert(args.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                            extra.begin(), extra.end());
                break;
            }
            break;
        }
    } catch (const esn::DataError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    std::vector<const char*> cargs;
    cargs.reserve(args.size());
    for (const std::string& s : args) cargs.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return run_gen(g);
        if (*train) {
            // Echo the effective configuration so runs are reproducible from the log.
            std::cout << "# effective config\n" << train->config_to_str(true, false);
            return run_train(t);
        }
        if (*eval) return run_eval(e);
        if (*gradcheck) return run_gradcheck(gc);
    } catch (const esn::ShapeError& err) {
        std::cerr << "shape error: " << err.what() << "\n";
        return 2;
    } catch (const esn::NumericError& err) {
        std::cerr << "numeric error: " << err.what() << "\n";
        return 3;
    } catch (const esn::DataError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
