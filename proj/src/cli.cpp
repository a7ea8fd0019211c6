#include "rtgn/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>

#include "rtgn/data.hpp"
#include "rtgn/heads.hpp"
#include "rtgn/noise.hpp"

namespace rtgn::cli {

namespace {

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error(p.string() + ": cannot open for writing");
    return os;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

fs::path boundaries_path(const fs::path& trace) {
    fs::path p = trace;
    p += ".boundaries";
    return p;
}

data::EventDataset cmd_synth(const RunConfig& config, const fs::path& out) {
    config.synth.validate();
    auto ds = data::synth_generate(config.synth);
    auto os = open_out(out);
    data::export_csv(os, ds);
    if (!os) throw std::runtime_error(out.string() + ": write failed");
    return ds;
}

Model cmd_train(const RunConfig& config, const fs::path& data_csv, const fs::path& checkpoint,
                const fs::path& loss_csv, std::ostream* log) {
    config.validate();
    const auto ds = data::ingest_csv(data_csv);
    auto split = data::chronological_split(ds, config.split);
    const auto scaler = data::standardize(split);

    encoder::EncoderConfig ec = config.encoder;
    if (ec.feature_dim != 0 && ec.feature_dim != ds.feature_dim)
        throw std::invalid_argument("encoder.feature_dim = " + std::to_string(ec.feature_dim) + " but " +
                                    data_csv.string() + " has " + std::to_string(ds.feature_dim) + " features");
    ec.feature_dim = ds.feature_dim;

    Model model = make_model(ec, config.head, config.seed);
    model.scaler = scaler;
    model.config_echo = config.to_ini();

    heads::ProgressFn progress;
    if (log) {
        progress = [&](const heads::EpochLoss& e) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "epoch %zu/%zu  positive %.6f  negative %.6f\n", e.epoch,
                          config.train.epochs, e.positive, e.negative);
            *log << buf << std::flush;
        };
    }
    const auto trace = heads::train(model, split.train, ds.node_count(), config.train, progress);

    if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
    save_checkpoint(checkpoint, model);
    auto os = open_out(loss_csv);
    heads::write_loss_csv(os, trace);
    return model;
}

eval::ExperimentResult cmd_evaluate(const RunConfig& config, const std::vector<fs::path>& checkpoints,
                                    const fs::path& data_csv, const fs::path& report_csv) {
    config.validate();
    if (checkpoints.empty()) throw std::invalid_argument("evaluate: at least one --checkpoint is required");
    std::vector<Model> models;
    models.reserve(checkpoints.size());
    for (const auto& p : checkpoints) models.push_back(load_checkpoint(p));
    std::vector<Model*> ptrs;
    for (auto& m : models) ptrs.push_back(&m);

    const auto ds = data::ingest_csv(data_csv);
    const auto split = data::chronological_split(ds, config.split);
    auto result = eval::run_experiment(ptrs, split, ds.node_count(), config.eval);
    auto os = open_out(report_csv);
    eval::write_report_csv(os, result.rows);
    return result;
}

std::vector<eval::ScoredEvent> cmd_trace(const RunConfig& config, const fs::path& checkpoint,
                                         const fs::path& data_csv, const fs::path& out,
                                         std::optional<double> noise_ratio) {
    config.validate();
    Model model = load_checkpoint(checkpoint);
    const auto ds = data::ingest_csv(data_csv);
    auto split = data::chronological_split(ds, config.split);
    if (split.train.empty()) throw std::invalid_argument("trace: empty training split");
    model.scaler.apply(split.train);
    model.scaler.apply(split.val);
    model.scaler.apply(split.test);

    std::vector<ctdg::Event> test = split.test;
    if (noise_ratio) {
        const auto noise = eval::noise_for_trial(split.test, ds.node_count(), split.t_test, split.t_max,
                                                 ds.feature_dim, *noise_ratio, 0, 0, config.eval);
        test = noise::inject(split.test, noise, split.t_test, split.t_max);
    }

    auto state = eval::initial_state(model, ds.node_count(), split.train.front().t);
    auto scored = eval::score_stream(model, state, split.train);
    auto val = eval::score_stream(model, state, split.val);
    auto tail = eval::score_stream(model, state, test, {config.eval.update_memory_at_inference});
    scored.insert(scored.end(), val.begin(), val.end());
    scored.insert(scored.end(), tail.begin(), tail.end());

    auto os = open_out(out);
    eval::write_trace_csv(os, scored);
    auto bs = open_out(boundaries_path(out));
    bs << fmt17(split.t_val) << "\n" << fmt17(split.t_test) << "\n";
    return scored;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Noise-robust one-class intrusion detection on event streams"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string head;
    app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides [run] seed)");
    app.add_option("--head", head, "detection head: svdd | gaussian")
        ->check(CLI::IsMember({"svdd", "gaussian"}));

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    std::string synth_out;
    synth->add_option("--out,-o", synth_out, "output CSV")->required();

    auto* train = app.add_subcommand("train", "train a detector and write a checkpoint");
    std::string train_data, train_ckpt, train_loss;
    std::optional<std::size_t> epochs;
    std::optional<double> lr;
    train->add_option("--data", train_data, "dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--out,-o", train_ckpt, "checkpoint path")->required();
    train->add_option("--loss", train_loss, "per-epoch loss CSV (default: <checkpoint>.loss.csv)");
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--lr", lr, "learning rate");

    auto* evaluate = app.add_subcommand("evaluate", "noise-injection trials and a summary report");
    std::string eval_data, eval_report;
    std::vector<std::string> eval_ckpts;
    std::vector<double> ratios;
    std::optional<std::size_t> resamples;
    evaluate->add_option("--data", eval_data, "dataset CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--checkpoint,-c", eval_ckpts, "checkpoint (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out,-o", eval_report, "report CSV")->required();
    evaluate->add_option("--ratios", ratios, "noise ratios in percent")->delimiter(',');
    evaluate->add_option("--resamples", resamples, "noise resamples per ratio (>= 2)");

    auto* trace = app.add_subcommand("trace", "per-event score trace over the whole stream");
    std::string trace_data, trace_ckpt, trace_out;
    std::optional<double> trace_noise;
    trace->add_option("--data", trace_data, "dataset CSV")->required()->check(CLI::ExistingFile);
    trace->add_option("--checkpoint,-c", trace_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
    trace->add_option("--out,-o", trace_out, "trace CSV")->required();
    trace->add_option("--noise-ratio", trace_noise, "inject noise into the test part (percent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed) cfg.apply_seed(*seed);
        if (!head.empty()) cfg.head = encoder::parse_head(head);
        if (epochs) cfg.train.epochs = *epochs;
        if (lr) cfg.train.lr = *lr;
        if (!ratios.empty()) cfg.eval.noise_ratios = ratios;
        if (resamples) cfg.eval.resamples = *resamples;

        if (*synth) {
            const auto ds = cmd_synth(cfg, synth_out);
            err << "wrote " << ds.events.size() << " events over " << ds.node_count() << " nodes\n";
            out << synth_out << "\n";
        } else if (*train) {
            const fs::path loss = train_loss.empty() ? fs::path(train_ckpt + ".loss.csv") : fs::path(train_loss);
            cmd_train(cfg, train_data, train_ckpt, loss, &err);
            out << train_ckpt << "\n";
        } else if (*evaluate) {
            std::vector<fs::path> ck(eval_ckpts.begin(), eval_ckpts.end());
            const auto result = cmd_evaluate(cfg, ck, eval_data, eval_report);
            out << eval::render_report(result.rows);
        } else if (*trace) {
            cmd_trace(cfg, trace_ckpt, trace_data, trace_out, trace_noise);
            out << trace_out << "\n";
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace rtgn::cli
