#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cada/agglomerate.hpp"
#include "cada/context.hpp"
#include "cada/eval.hpp"
#include "cada/forest.hpp"
#include "cada/io.hpp"
#include "cada/predictor.hpp"
#include "cada/rng.hpp"
#include "cada/synth.hpp"
#include "cada/watershed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kModel = 4 };

// One long-form flag bound to a typed variable. Resolution order: built-in
// default < JSON config file < explicit flag.
struct Param {
    std::string key;
    CLI::Option* opt = nullptr;
    std::function<json()> get;
    std::function<void(const json&)> set;
};

class Command {
public:
    Command(CLI::App& root, const std::string& name, const std::string& help) : app_(root.add_subcommand(name, help))
    {
        app_->add_option("--config", config_path_, "JSON file of parameters; explicit flags win");
    }

    template <typename T>
    CLI::Option* add(const std::string& key, T& var, const std::string& help)
    {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        CLI::Option* o = app_->add_option(flag, var, help)->capture_default_str();
        params_.push_back({key, o, [&var] { return json(var); }, [&var](const json& j) { var = j.get<T>(); }});
        return o;
    }

    CLI::Option* add_switch(const std::string& key, std::string& var, const std::string& help)
    {
        return add(key, var, help)->check(CLI::IsMember({"on", "off"}));
    }

    CLI::Option* add_flag(const std::string& key, bool& var, const std::string& help)
    {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        CLI::Option* o = app_->add_flag(flag, var, help);
        params_.push_back({key, o, [&var] { return json(var); }, [&var](const json& j) { var = j.get<bool>(); }});
        return o;
    }

    CLI::App* app() const { return app_; }
    bool parsed() const { return app_->parsed(); }

    // Applies the config file underneath the explicit flags and returns the
    // fully resolved parameter set.
    json resolve()
    {
        json resolved = json::object();
        std::vector<const Param*> explicit_params;
        for (const Param& p : params_) {
            if (p.opt->count() > 0) {
                explicit_params.push_back(&p);
            }
        }
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) {
                throw cada::IoError("cannot open config file '" + config_path_ + "'");
            }
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw cada::ValueError("config file '" + config_path_ + "': " + e.what());
            }
            if (!doc.is_object()) {
                throw cada::ValueError("config file '" + config_path_ + "' must hold a JSON object");
            }
            for (const auto& [key, value] : doc.items()) {
                if (key == "command") {
                    continue;
                }
                const Param* p = find(key);
                if (!p) {
                    throw cada::ValueError("unknown key '" + key + "' in config file '" + config_path_ + "'");
                }
                if (p->opt->count() == 0) {
                    try {
                        p->set(value);
                    } catch (const json::exception& e) {
                        throw cada::ValueError("config key '" + key + "': " + e.what());
                    }
                }
            }
        }
        resolved["command"] = app_->get_name();
        for (const Param& p : params_) {
            resolved[p.key] = p.get();
        }
        return resolved;
    }

private:
    const Param* find(const std::string& key) const
    {
        for (const Param& p : params_) {
            if (p.key == key) {
                return &p;
            }
        }
        return nullptr;
    }

    CLI::App* app_;
    std::string config_path_;
    std::vector<Param> params_;
};

bool on(const std::string& s)
{
    return s == "on";
}

std::string join(const std::string& dir, const std::string& name)
{
    return (fs::path(dir) / name).string();
}

void require_dir(const std::string& dir)
{
    if (dir.empty()) {
        throw cada::ValueError("--out is required");
    }
    if (!fs::is_directory(dir)) {
        throw cada::IoError("output directory '" + dir + "' does not exist");
    }
}

void echo_config(const std::string& dir, const json& resolved)
{
    cada::write_text(join(dir, "config.json"), resolved.dump(2) + "\n");
}

std::string format_delta(double d)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", d);
    return buf;
}

// "lo:hi:step", inclusive of hi up to rounding.
std::vector<double> parse_sweep(const std::string& spec)
{
    double lo = 0;
    double hi = 0;
    double step = 0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || hi < lo) {
        throw cada::ValueError("sweep must look like lo:hi:step with step > 0, got '" + spec + "'");
    }
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) {
        out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e9) / 1e9);
    }
    return out;
}

cada::ProbabilityStack load_channels(const std::string& dir)
{
    const cada::ContextConfig defaults;
    return cada::read_stack(dir, defaults.channels);
}

// ---- synth ---------------------------------------------------------------

struct SynthOpts {
    cada::SynthParams p;
    std::string out;

    void bind(Command& c)
    {
        c.add("dims", p.dims, "grid extents, slowest axis first")->delimiter(',');
        c.add("n_cells", p.n_cells, "number of Voronoi cells");
        c.add("mito_min", p.mito_min, "minimum mitochondria per cell");
        c.add("mito_max", p.mito_max, "maximum mitochondria per cell");
        c.add("radius_min", p.radius_min, "smallest blob semi-axis (voxels)");
        c.add("radius_max", p.radius_max, "largest blob semi-axis (voxels)");
        c.add("mito_margin", p.mito_margin, "cytoplasm voxels kept between blobs and membranes");
        c.add("boundary_blur_sigma", p.boundary_blur_sigma, "Gaussian blur of the membrane maps");
        c.add("noise_sigma", p.noise_sigma, "noise amplitude");
        c.add("noise_corr", p.noise_corr, "noise correlation length");
        c.add("mito_membrane", p.mito_membrane, "boundary response on mitochondrion outlines");
        c.add("cristae", p.cristae, "boundary response on internal mitochondrion membranes");
        c.add("membrane_dropout", p.membrane_dropout, "depth of membrane dimming");
        c.add("dropout_corr", p.dropout_corr, "correlation length of membrane dimming");
        c.add("seed", p.seed, "generator seed");
    }
};

void write_synth(const std::string& dir, const cada::SynthVolume& v)
{
    cada::write_volume(join(dir, "gt.segv"), v.cells);
    cada::write_volume(join(dir, "mito.segv"), v.mito);
    cada::write_stack(dir, v.channels);
}

int cmd_synth(SynthOpts& o, const json& resolved)
{
    require_dir(o.out);
    o.p.validate();
    const cada::SynthVolume v = cada::synth_generate(o.p);
    write_synth(o.out, v);
    echo_config(o.out, resolved);
    std::cout << "synth: " << v.cells.dims().to_string() << ", " << o.p.n_cells << " cells, " << v.blob_cell.size()
              << " mitochondria -> " << o.out << "\n";
    return kOk;
}

// ---- watershed -----------------------------------------------------------

struct WatershedOpts {
    std::string boundary;
    std::string channels;
    double theta_seed = 0.1;
    std::string out;

    void bind(Command& c)
    {
        c.add("boundary", boundary, "boundary probability volume (.segv)");
        c.add("channels", channels, "channel directory; its boundary.segv is used when --boundary is unset");
        c.add("theta_seed", theta_seed, "seed threshold on boundary probability");
    }
};

cada::LabelVolume run_watershed(const WatershedOpts& o)
{
    std::string path = o.boundary;
    if (path.empty()) {
        if (o.channels.empty()) {
            throw cada::ValueError("watershed needs --boundary or --channels");
        }
        path = join(o.channels, std::string(cada::channel::kBoundary) + ".segv");
    }
    return cada::watershed(cada::read_channel(path), o.theta_seed);
}

int cmd_watershed(WatershedOpts& o, const json& resolved)
{
    require_dir(o.out);
    const cada::LabelVolume labels = run_watershed(o);
    cada::write_volume(join(o.out, "labels.segv"), labels);
    echo_config(o.out, resolved);
    cada::Label max_label = 0;
    for (cada::Label l : labels.data()) {
        max_label = std::max(max_label, l);
    }
    std::cout << "watershed: " << max_label << " regions -> " << join(o.out, "labels.segv") << "\n";
    return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainOpts {
    std::string labels;
    std::string gt;
    std::string channels;
    std::size_t n_trees = 50;
    std::size_t max_depth = 20;
    std::uint64_t seed = 0;
    std::size_t iterations = 1;
    bool accumulate = false;
    std::string context = "on";
    double theta_mito = 0.5;
    double train_delta = 1.0;
    std::string strict = "on";
    std::string policy = "delayed";
    std::string out;

    void bind(Command& c, bool with_paths = true)
    {
        if (with_paths) {
            c.add("labels", labels, "over-segmentation (.segv)");
            c.add("gt", gt, "ground-truth labels (.segv)");
            c.add("channels", channels, "channel directory");
        }
        c.add("n_trees", n_trees, "trees in the forest");
        c.add("max_depth", max_depth, "depth limit per tree");
        c.add("seed", seed, "forest seed");
        c.add("iterations", iterations, "training iterations (1 = single pass)");
        c.add_flag("accumulate", accumulate, "keep rows of all iterations");
        c.add_switch("context", context, "context-aware training (on|off)");
        c.add("theta_mito", theta_mito, "mean mito probability marking a mitochondrion region");
        c.add("train_delta", train_delta, "threshold of the labelling agglomeration");
        c.add_switch("strict", strict, "skip merges across ground-truth boundaries while labelling (on|off)");
        c.add("policy", policy, "agglomeration policy while labelling (standard|delayed)")
            ->check(CLI::IsMember({"standard", "delayed"}));
    }

    cada::TrainParams params() const
    {
        cada::TrainParams t;
        t.iterations = iterations;
        t.accumulate = accumulate;
        t.context = on(context);
        t.theta_mito = theta_mito;
        t.train_delta = train_delta;
        t.strict = on(strict);
        t.policy = cada::parse_policy(policy);
        t.forest.n_trees = n_trees;
        t.forest.max_depth = max_depth;
        t.forest.seed = seed;
        return t;
    }
};

json train_and_save(const TrainOpts& o, const cada::LabelVolume& labels, const cada::LabelVolume& gt,
                    const cada::ProbabilityStack& probs, const std::string& dir)
{
    const auto t0 = std::chrono::steady_clock::now();
    const cada::RegionGraph g0 = cada::build_rag(labels, probs);
    const cada::TrainResult r = cada::iterative_train(g0, labels, gt, o.params());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.forest.save(join(dir, "forest.json"));
    // Wall time is reported on stdout only, so the summary file is reproducible.
    std::cout << "train: " << r.rows_per_iteration.size() << " iteration(s), final set " << r.final_set.size()
              << " rows, " << seconds << " s\n";
    json summary = {{"iterations", r.rows_per_iteration.size()},
                    {"rows_per_iteration", r.rows_per_iteration},
                    {"new_rows", r.new_rows},
                    {"n_features", r.forest.n_features()}};
    cada::write_text(join(dir, "train_summary.json"), summary.dump(2) + "\n");
    return summary;
}

int cmd_train(TrainOpts& o, const json& resolved)
{
    require_dir(o.out);
    const cada::LabelVolume labels = cada::read_labels(o.labels);
    const cada::LabelVolume gt = cada::read_labels(o.gt);
    const cada::ProbabilityStack probs = load_channels(o.channels);
    train_and_save(o, labels, gt, probs, o.out);
    echo_config(o.out, resolved);
    return kOk;
}

// ---- segment -------------------------------------------------------------

struct SegmentOpts {
    std::string labels;
    std::string channels;
    std::string forest;
    std::string estimator = "forest";
    std::string policy = "delayed";
    std::string context = "on";
    std::string lazy = "off";
    double delta_c = 0.2;
    double delta_m = 0.8;
    double theta_mito = 0.5;
    std::string sweep;
    std::string gt;
    std::uint64_t seed = 0;
    std::string out;

    void bind(Command& c, bool with_paths = true)
    {
        if (with_paths) {
            c.add("labels", labels, "over-segmentation (.segv)");
            c.add("channels", channels, "channel directory");
            c.add("forest", forest, "forest JSON (estimator forest)");
            c.add("gt", gt, "ground truth; adds metrics.csv");
        }
        c.add("estimator", estimator, "cytoplasm confidence: forest or mean boundary probability")
            ->check(CLI::IsMember({"forest", "mean"}));
        c.add("policy", policy, "standard|delayed")->check(CLI::IsMember({"standard", "delayed"}));
        c.add_switch("context", context, "two-phase context-aware agglomeration (on|off)");
        c.add_switch("lazy", lazy, "lazy key updates (on|off)");
        c.add("delta_c", delta_c, "cytoplasm stopping threshold");
        c.add("delta_m", delta_m, "mitochondria stopping threshold on 1 - rho");
        c.add("theta_mito", theta_mito, "mean mito probability marking a mitochondrion region");
        c.add("sweep", sweep, "delta_c sweep lo:hi:step, one output set per value");
        c.add("seed", seed, "recorded for reproducibility");
    }

    cada::ContextConfig config(double delta) const
    {
        cada::ContextConfig c;
        c.theta_mito = theta_mito;
        c.delta_c = delta;
        c.delta_m = delta_m;
        c.policy = cada::parse_policy(policy);
        c.context = on(context);
        c.lazy = on(lazy);
        c.seed = seed;
        c.validate();
        return c;
    }
};

void write_trace(const std::string& path, const cada::MergeTrace& t)
{
    std::ostringstream s;
    cada::write_trace_csv(s, t);
    cada::write_text(path, s.str());
}

// Runs one or more delta_c values and writes volumes, traces, counters and,
// with a ground truth, metrics.csv.
void segment_into(const SegmentOpts& o, const cada::LabelVolume& labels, const cada::ProbabilityStack& probs,
                  const cada::LabelVolume* gt, const std::string& dir)
{
    cada::Forest forest;
    cada::ConfidenceFn h;
    if (o.estimator == "forest") {
        if (o.forest.empty()) {
            throw cada::ValueError("--forest is required with estimator forest");
        }
        forest = cada::Forest::load(o.forest);
        h = cada::forest_confidence(forest);
    } else {
        h = cada::mean_boundary_confidence;
    }

    const bool sweeping = !o.sweep.empty();
    const std::vector<double> deltas = sweeping ? parse_sweep(o.sweep) : std::vector<double>{o.delta_c};
    std::ostringstream metrics;
    cada::write_metrics_header(metrics);
    for (double d : deltas) {
        const cada::PipelineResult r = cada::run_context_pipeline(labels, probs, h, o.config(d));
        const std::string suffix = sweeping ? "_" + format_delta(d) : "";
        cada::write_volume(join(dir, "segmentation" + suffix + ".segv"), r.segmentation);
        write_trace(join(dir, "trace_cyto" + suffix + ".csv"), r.cyto);
        write_trace(join(dir, "trace_mito" + suffix + ".csv"), r.mito);
        const json counters = {{"cyto", json::parse(cada::counters_json(r.cyto))},
                               {"mito", json::parse(cada::counters_json(r.mito))}};
        cada::write_text(join(dir, "counters" + suffix + ".json"), counters.dump(2) + "\n");
        std::cout << "segment: delta_c " << format_delta(d) << ", " << r.cyto.steps.size() << " + "
                  << r.mito.steps.size() << " merges\n";
        if (gt) {
            cada::write_metrics_row(metrics, cada::evaluate(r.segmentation, *gt, d));
        }
    }
    if (gt) {
        cada::write_text(join(dir, "metrics.csv"), metrics.str());
    }
}

int cmd_segment(SegmentOpts& o, const json& resolved)
{
    require_dir(o.out);
    const cada::LabelVolume labels = cada::read_labels(o.labels);
    const cada::ProbabilityStack probs = load_channels(o.channels);
    std::optional<cada::LabelVolume> gt;
    if (!o.gt.empty()) {
        gt = cada::read_labels(o.gt);
    }
    segment_into(o, labels, probs, gt ? &*gt : nullptr, o.out);
    echo_config(o.out, resolved);
    return kOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalOpts {
    std::string seg;
    std::string gt;
    std::string exclude_zero = "on";
    std::string out;

    void bind(Command& c)
    {
        c.add("seg", seg, "segmentation (.segv)")->required();
        c.add("gt", gt, "ground truth (.segv)")->required();
        c.add_switch("exclude_zero", exclude_zero, "ignore voxels labelled 0 (on|off)");
    }
};

int cmd_eval(EvalOpts& o, const json& resolved)
{
    const cada::LabelVolume seg = cada::read_labels(o.seg);
    const cada::LabelVolume gt = cada::read_labels(o.gt);
    const cada::ContingencyTable t = cada::contingency(seg, gt, on(o.exclude_zero));
    cada::MetricsRow row;
    row.vi = cada::split_vi(t);
    row.re = cada::split_re(t);
    std::ostringstream s;
    cada::write_metrics_header(s);
    cada::write_metrics_row(s, row);
    if (o.out.empty()) {
        std::cout << s.str();
    } else {
        require_dir(o.out);
        cada::write_text(join(o.out, "metrics.csv"), s.str());
        echo_config(o.out, resolved);
    }
    return kOk;
}

// ---- overlay -------------------------------------------------------------

struct OverlayOpts {
    std::string seg;
    std::string background;
    std::uint64_t seed = 0;
    std::string out;

    void bind(Command& c)
    {
        c.add("seg", seg, "segmentation (.segv)")->required();
        c.add("background", background, "optional probability map shown underneath (.segv)");
        c.add("seed", seed, "color seed");
    }
};

int cmd_overlay(OverlayOpts& o, const json& resolved)
{
    require_dir(o.out);
    const cada::LabelVolume seg = cada::read_labels(o.seg);
    std::optional<cada::ChannelGrid> bg;
    if (!o.background.empty()) {
        bg = cada::read_channel(o.background);
        if (!(bg->dims() == seg.dims())) {
            throw cada::ShapeError("background extents " + bg->dims().to_string() + " differ from segmentation " +
                                   seg.dims().to_string());
        }
    }
    const cada::Dims& d = seg.dims();
    const std::size_t planes = d.ndim() == 3 ? d[0] : 1;
    const std::size_t h = d[d.ndim() - 2];
    const std::size_t w = d[d.ndim() - 1];
    for (std::size_t z = 0; z < planes; ++z) {
        std::string img = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
        img.reserve(img.size() + 3 * w * h);
        for (std::size_t i = z * h * w; i < (z + 1) * h * w; ++i) {
            const std::uint64_t c = cada::mix64(o.seed ^ cada::mix64(seg[i]));
            for (int k = 0; k < 3; ++k) {
                double v = static_cast<double>((c >> (8 * k)) & 0xff);
                if (bg) {
                    v = 0.5 * v + 0.5 * 255.0 * (1.0 - (*bg)[i]);
                }
                img.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
            }
        }
        char name[32];
        std::snprintf(name, sizeof name, "plane_%03zu.ppm", z);
        cada::write_text(join(o.out, name), img);
    }
    echo_config(o.out, resolved);
    std::cout << "overlay: " << planes << " plane(s) -> " << o.out << "\n";
    return kOk;
}

// ---- pipeline ------------------------------------------------------------

struct PipelineOpts {
    SynthOpts synth;
    std::uint64_t train_seed = 1000;
    double theta_seed = 0.1;
    TrainOpts train;
    SegmentOpts segment;

    void bind(Command& c)
    {
        synth.bind(c);
        c.add("train_seed", train_seed, "generator seed of the training volume");
        c.add("theta_seed", theta_seed, "watershed seed threshold");
        c.add("n_trees", train.n_trees, "trees in the forest");
        c.add("max_depth", train.max_depth, "depth limit per tree");
        c.add("forest_seed", train.seed, "forest seed");
        c.add("iterations", train.iterations, "training iterations");
        c.add_flag("accumulate", train.accumulate, "keep rows of all iterations");
        c.add("train_delta", train.train_delta, "threshold of the labelling agglomeration");
        c.add_switch("context", segment.context, "context-aware training and segmentation (on|off)");
        c.add("policy", segment.policy, "standard|delayed")->check(CLI::IsMember({"standard", "delayed"}));
        c.add_switch("lazy", segment.lazy, "lazy key updates (on|off)");
        c.add("estimator", segment.estimator, "forest|mean")->check(CLI::IsMember({"forest", "mean"}));
        c.add("delta_c", segment.delta_c, "cytoplasm stopping threshold");
        c.add("delta_m", segment.delta_m, "mitochondria stopping threshold");
        c.add("theta_mito", segment.theta_mito, "mean mito probability marking a mitochondrion region");
        c.add("sweep", segment.sweep, "delta_c sweep lo:hi:step");
    }
};

int cmd_pipeline(PipelineOpts& o, const json& resolved)
{
    require_dir(o.synth.out);
    const std::string root = o.synth.out;
    const std::string train_dir = join(root, "train");
    const std::string test_dir = join(root, "test");
    fs::create_directories(train_dir);
    fs::create_directories(test_dir);

    o.train.context = o.segment.context;
    o.train.theta_mito = o.segment.theta_mito;
    o.segment.seed = o.synth.p.seed;

    cada::SynthParams tp = o.synth.p;
    tp.seed = o.train_seed;
    const cada::SynthVolume train_vol = cada::synth_generate(tp);
    write_synth(train_dir, train_vol);
    const cada::LabelVolume train_labels =
        cada::watershed(train_vol.channels.channel(cada::channel::kBoundary), o.theta_seed);
    cada::write_volume(join(train_dir, "labels.segv"), train_labels);

    const cada::SynthVolume test_vol = cada::synth_generate(o.synth.p);
    write_synth(test_dir, test_vol);
    const cada::LabelVolume test_labels =
        cada::watershed(test_vol.channels.channel(cada::channel::kBoundary), o.theta_seed);
    cada::write_volume(join(test_dir, "labels.segv"), test_labels);

    if (o.segment.estimator == "forest") {
        train_and_save(o.train, train_labels, train_vol.cells, train_vol.channels, train_dir);
        o.segment.forest = join(train_dir, "forest.json");
    }
    segment_into(o.segment, test_labels, test_vol.channels, &test_vol.cells, test_dir);
    echo_config(root, resolved);
    std::cout << "pipeline: metrics -> " << join(test_dir, "metrics.csv") << "\n";
    return kOk;
}

int report(const char* kind, const std::exception& e, int code)
{
    std::cerr << "cada: " << kind << ": " << e.what() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Context-aware delayed agglomeration for volume segmentation"};
    app.require_subcommand(1);
    app.allow_extras(false);

    SynthOpts synth;
    Command c_synth(app, "synth", "generate a synthetic volume with ground truth");
    synth.bind(c_synth);
    c_synth.add("out", synth.out, "output directory");

    WatershedOpts ws;
    Command c_ws(app, "watershed", "marker-based watershed over-segmentation");
    ws.bind(c_ws);
    c_ws.add("out", ws.out, "output directory");

    TrainOpts train;
    Command c_train(app, "train", "train the boundary forest");
    train.bind(c_train);
    c_train.add("out", train.out, "output directory");

    SegmentOpts seg;
    Command c_seg(app, "segment", "agglomerate an over-segmentation");
    seg.bind(c_seg);
    c_seg.add("out", seg.out, "output directory");

    EvalOpts ev;
    Command c_eval(app, "eval", "split VI and split Rand error");
    ev.bind(c_eval);
    c_eval.add("out", ev.out, "output directory (default: print to stdout)");

    OverlayOpts ov;
    Command c_ov(app, "overlay", "random-color overlay, one PPM per plane");
    ov.bind(c_ov);
    c_ov.add("out", ov.out, "output directory");

    PipelineOpts pipe;
    Command c_pipe(app, "pipeline", "synth, watershed, train, segment and eval in one run");
    pipe.bind(c_pipe);
    c_pipe.add("out", pipe.synth.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (c_synth.parsed()) {
            return cmd_synth(synth, c_synth.resolve());
        }
        if (c_ws.parsed()) {
            return cmd_watershed(ws, c_ws.resolve());
        }
        if (c_train.parsed()) {
            return cmd_train(train, c_train.resolve());
        }
        if (c_seg.parsed()) {
            return cmd_segment(seg, c_seg.resolve());
        }
        if (c_eval.parsed()) {
            return cmd_eval(ev, c_eval.resolve());
        }
        if (c_ov.parsed()) {
            return cmd_overlay(ov, c_ov.resolve());
        }
        if (c_pipe.parsed()) {
            return cmd_pipeline(pipe, c_pipe.resolve());
        }
    } catch (const cada::DataError& e) {
        return report("model/data error", e, kModel);
    } catch (const cada::IoError& e) {
        return report("i/o error", e, kIo);
    } catch (const cada::FormatError& e) {
        return report("format error", e, kIo);
    } catch (const cada::Error& e) {
        return report("invalid input", e, kUsage);
    } catch (const fs::filesystem_error& e) {
        return report("i/o error", e, kIo);
    }
    return kUsage;
}
