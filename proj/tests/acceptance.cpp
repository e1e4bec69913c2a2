// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: cada_acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cada/agglomerate.hpp"
#include "cada/context.hpp"
#include "cada/eval.hpp"
#include "cada/features.hpp"
#include "cada/histogram.hpp"
#include "cada/predictor.hpp"
#include "cada/synth.hpp"
#include "cada/watershed.hpp"
#include "reference_agglom.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using cada::Label;
using cada::LabelVolume;
using cada::RegionGraph;

namespace {

// Pinned tolerances and limits.
constexpr double kMetricTol = 1e-12;
constexpr double kQuartileTol = cada::MomentHistogram::kBinWidth + 1e-12;
constexpr double kDelayedWinRate = 0.80;
constexpr double kContainment = 0.95;
constexpr double kTimeRatio = 1.0 / 3.0;
constexpr double kViSumRel = 0.20;
constexpr double kRhoTol = 1e-12;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- 1 ----------------------------------------------------------------------

Outcome metric_exactness()
{
    Outcome o;
    const auto same = testutil::labels_of({2, 2}, {1, 1, 2, 3});
    const auto t0 = cada::contingency(same, same);
    const auto vi0 = cada::split_vi(t0);
    const auto re0 = cada::split_re(t0);
    o.pass &= vi0.under == 0 && vi0.over == 0 && re0.under == 0 && re0.over == 0;

    const auto gt = testutil::labels_of({1, 4}, {1, 1, 1, 1});
    const auto seg = testutil::labels_of({1, 4}, {1, 1, 2, 2});
    const auto t = cada::contingency(seg, gt);
    o.pass &= std::fabs(cada::split_vi(t).over - 1.0) < kMetricTol;
    o.pass &= std::fabs(cada::split_re(t).over - 4.0 / 6.0) < kMetricTol;

    cada::SeededRng rng(1);
    std::size_t mismatches = 0;
    const int cases = 500;
    for (int rep = 0; rep < cases; ++rep) {
        const std::size_t z = 2 + rng.below(99);
        const cada::Dims d({1, z});
        const auto a = testutil::random_noise_labels(d, 1 + rng.below(8), rng);
        const auto b = testutil::random_noise_labels(d, 1 + rng.below(8), rng);
        std::uint64_t ue = 0;
        std::uint64_t oe = 0;
        std::uint64_t pairs = 0;
        for (std::size_t i = 0; i < z; ++i) {
            for (std::size_t j = i + 1; j < z; ++j) {
                ++pairs;
                ue += a[i] == a[j] && b[i] != b[j];
                oe += b[i] == b[j] && a[i] != a[j];
            }
        }
        const auto re = cada::split_re(cada::contingency(a, b));
        mismatches += re.under != static_cast<double>(ue) / pairs || re.over != static_cast<double>(oe) / pairs;
    }
    o.pass &= mismatches == 0;
    o.detail = "toy values exact, " + std::to_string(cases - mismatches) + "/" + std::to_string(cases) +
               " random labelings match enumeration";
    return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome rag_rebuild()
{
    Outcome o;
    cada::SeededRng rng(2);
    int equal = 0;
    std::string first_why;
    for (int rep = 0; rep < 100; ++rep) {
        const cada::Dims d({16, 16, 16});
        const auto labels = testutil::random_partition(d, 20 + rng.below(60), rng);
        const auto probs = testutil::random_stack(d, {"boundary", "mitochondria"}, rng);
        RegionGraph g = cada::build_rag(labels, probs);
        cada::MergeForest forest;
        const std::size_t merges = rng.below(g.node_count());
        for (std::size_t k = 0; k < merges && g.edge_count() > 0; ++k) {
            const auto ids = g.edge_ids();
            const cada::BoundaryEdge& e = g.edge(ids[rng.below(ids.size())]);
            const Label keep = e.lo;
            const Label absorb = e.hi;
            g.merge(keep, absorb);
            forest.record(keep, absorb);
        }
        std::string why;
        if (cada::same_structure(g, cada::build_rag(forest.relabel(labels), probs), &why)) {
            ++equal;
        } else if (first_why.empty()) {
            first_why = why;
        }
    }
    o.pass = equal == 100;
    o.detail = std::to_string(equal) + "/100 mutated graphs equal their rebuild" +
               (first_why.empty() ? "" : " (" + first_why + ")");
    return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome feature_oracle()
{
    Outcome o;
    cada::SeededRng rng(3);
    int merge_ok = 0;
    int quart_ok = 0;
    double worst = 0;
    auto sample = [&](std::size_t n) {
        std::vector<double> v(n);
        const bool skew = rng.below(2) == 1;
        for (double& x : v) {
            x = rng.uniform01();
            if (skew) {
                x = x * x * x;
            }
        }
        return v;
    };
    auto hist = [](const std::vector<double>& xs) {
        cada::MomentHistogram h;
        for (double x : xs) {
            h.accumulate(x);
        }
        return h;
    };
    for (int rep = 0; rep < 1000; ++rep) {
        auto xs = sample(1 + rng.below(400));
        const auto ys = sample(1 + rng.below(400));
        const auto merged = cada::merge_hist(hist(xs), hist(ys));
        xs.insert(xs.end(), ys.begin(), ys.end());
        const auto direct = hist(xs);
        merge_ok += merged.count() == direct.count() && merged.raw_sum() == direct.raw_sum() &&
                    merged.raw_sum_sq() == direct.raw_sum_sq() && merged.bins() == direct.bins();

        std::sort(xs.begin(), xs.end());
        bool ok = true;
        for (int q : {25, 50, 75, 100}) {
            const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(xs.size()) * q / 100.0));
            const double exact = xs[std::max<std::size_t>(rank, 1) - 1];
            const double err = std::fabs(merged.quartile(q) - exact);
            worst = std::max(worst, err);
            ok &= err <= kQuartileTol;
        }
        quart_ok += ok;
    }
    o.pass = merge_ok == 1000 && quart_ok == 1000;
    o.detail = std::to_string(merge_ok) + "/1000 exact merges, " + std::to_string(quart_ok) +
               "/1000 quartile sets in tolerance, worst error " + fmt("%.4f", worst);
    return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome engine_fidelity()
{
    Outcome o;
    cada::SeededRng rng(4);
    int ref_ok = 0;
    int lazy_ok = 0;
    std::uint64_t eager_push = 0;
    std::uint64_t lazy_push = 0;
    std::size_t merges = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto labels = testutil::random_partition(cada::Dims({16, 16}), 2 + rng.below(63), rng);
        const auto probs = testutil::constant_stack(labels.dims(), "boundary", 0.5f);
        const auto table = refimpl::hashed_table(rng.next_u64());
        const auto h = refimpl::adapt(table);
        cada::AgglomConfig cfg;
        cfg.delta = 0.2 + 0.05 * static_cast<double>(rng.below(9));
        cfg.policy = cada::Policy::Delayed;

        RegionGraph eager_g = cada::build_rag(labels, probs);
        const auto eager = cada::agglomerate_delayed(eager_g, h, cfg);
        const auto expect = refimpl::delayed(refimpl::Graph::from(labels), table, cfg.delta);
        ref_ok += eager.steps == expect;

        cfg.lazy_updates = true;
        RegionGraph lazy_g = cada::build_rag(labels, probs);
        const auto lazy = cada::agglomerate_delayed(lazy_g, h, cfg);
        lazy_ok += lazy.steps == eager.steps && lazy.counters.pushes <= eager.counters.pushes;
        eager_push += eager.counters.pushes;
        lazy_push += lazy.counters.pushes;
        merges += eager.steps.size();
    }
    o.pass = ref_ok == 100 && lazy_ok == 100;
    o.detail = std::to_string(ref_ok) + "/100 traces equal the reference, " + std::to_string(lazy_ok) +
               "/100 lazy runs equal eager with no more pushes (" + std::to_string(merges) + " merges, pushes " +
               std::to_string(lazy_push) + " lazy vs " + std::to_string(eager_push) + " eager)";
    return o;
}

// ---- shared synthetic data -------------------------------------------------

struct Instance {
    cada::SynthVolume v;
    LabelVolume ws;
};

Instance make_instance(std::uint64_t seed)
{
    cada::SynthParams p;
    p.dims = {256, 256};
    p.seed = seed;
    Instance in{cada::synth_generate(p), {}};
    in.ws = cada::watershed(in.v.channels.channel(cada::channel::kBoundary), 0.1);
    return in;
}

const std::vector<Instance>& test_instances()
{
    static const std::vector<Instance> all = [] {
        std::vector<Instance> out;
        for (std::uint64_t s = 0; s < 20; ++s) {
            out.push_back(make_instance(s));
        }
        return out;
    }();
    return all;
}

const Instance& train_instance()
{
    static const Instance in = make_instance(1000);
    return in;
}

cada::TrainResult train(bool context, std::size_t iterations, bool accumulate)
{
    const Instance& in = train_instance();
    const RegionGraph g0 = cada::build_rag(in.ws, in.v.channels);
    cada::TrainParams tp;
    tp.context = context;
    tp.iterations = iterations;
    tp.accumulate = accumulate;
    tp.forest.max_depth = 20;
    tp.forest.seed = 1000;
    return cada::iterative_train(g0, in.ws, in.v.cells, tp);
}

// ---- 5 ----------------------------------------------------------------------

Outcome delayed_vs_standard()
{
    Outcome o;
    int wins = 0;
    double sum_std = 0;
    double sum_del = 0;
    for (const Instance& in : test_instances()) {
        cada::ContextConfig c;
        c.context = false;
        c.delta_c = 0.2;
        c.policy = cada::Policy::Standard;
        const auto rs = cada::run_context_pipeline(in.ws, in.v.channels, cada::mean_boundary_confidence, c);
        c.policy = cada::Policy::Delayed;
        const auto rd = cada::run_context_pipeline(in.ws, in.v.channels, cada::mean_boundary_confidence, c);
        const double ue_s = cada::evaluate(rs.segmentation, in.v.cells).vi.under;
        const double ue_d = cada::evaluate(rd.segmentation, in.v.cells).vi.under;
        wins += ue_d <= ue_s;
        sum_std += ue_s;
        sum_del += ue_d;
    }
    const double n = static_cast<double>(test_instances().size());
    o.pass = wins >= kDelayedWinRate * n && sum_del < sum_std;
    o.detail = "delayed VI_UE <= standard on " + std::to_string(wins) + "/20 seeds (need 16), mean VI_UE delayed " +
               fmt("%.4f", sum_del / n) + " vs standard " + fmt("%.4f", sum_std / n);
    return o;
}

// ---- 6 ----------------------------------------------------------------------

struct Totals {
    double ue = 0;
    double oe = 0;
};

// Share of planted blobs whose majority final region holds at least as many
// voxels of the blob's enclosing cell outside mitochondria as of the blob.
std::pair<std::size_t, std::size_t> containment(const Instance& in, const LabelVolume& seg)
{
    std::map<Label, std::map<Label, std::uint64_t>> blob_regions;
    std::map<Label, std::map<Label, std::uint64_t>> region_cells;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (in.v.mito[i] != 0) {
            ++blob_regions[in.v.mito[i]][seg[i]];
        } else {
            ++region_cells[seg[i]][in.v.cells[i]];
        }
    }
    std::size_t ok = 0;
    for (const auto& [blob, regions] : blob_regions) {
        const auto best = std::max_element(regions.begin(), regions.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        const Label cell = in.v.blob_cell[blob - 1];
        const auto& cells = region_cells[best->first];
        const auto it = cells.find(cell);
        ok += it != cells.end() && it->second >= best->second;
    }
    return {ok, blob_regions.size()};
}

Outcome context_benefit()
{
    Outcome o;
    const auto cada_f = train(true, 3, true);
    const auto gala = train(false, 3, true);
    const auto& tests = test_instances();
    const double n = static_cast<double>(tests.size());

    Totals ctx;
    std::size_t contained = 0;
    std::size_t blobs = 0;
    for (const Instance& in : tests) {
        cada::ContextConfig c;
        c.delta_c = 0.2;
        c.delta_m = 0.8;
        c.theta_mito = 0.5;
        const auto r = cada::run_context_pipeline(in.ws, in.v.channels, cada_f.forest, c);
        const auto m = cada::evaluate(r.segmentation, in.v.cells);
        ctx.ue += m.vi.under / n;
        ctx.oe += m.vi.over / n;
        const auto [k, b] = containment(in, r.segmentation);
        contained += k;
        blobs += b;
    }

    // Oblivious runs over a range of thresholds; the comparison point is the
    // lowest VI_OE among those whose VI_UE does not exceed the context run's.
    std::optional<std::pair<double, Totals>> match;
    for (int k = 0; k <= 7; ++k) {
        const double delta = 0.06 + 0.02 * k;
        Totals t;
        for (const Instance& in : tests) {
            cada::ContextConfig c;
            c.context = false;
            c.delta_c = delta;
            const auto r = cada::run_context_pipeline(in.ws, in.v.channels, gala.forest, c);
            const auto m = cada::evaluate(r.segmentation, in.v.cells);
            t.ue += m.vi.under / n;
            t.oe += m.vi.over / n;
        }
        if (t.ue <= ctx.ue && (!match || t.oe < match->second.oe)) {
            match = std::make_pair(delta, t);
        }
    }

    const double share = blobs == 0 ? 0.0 : static_cast<double>(contained) / static_cast<double>(blobs);
    o.pass = match && ctx.oe < match->second.oe && share >= kContainment;
    o.detail = "context VI_OE " + fmt("%.4f", ctx.oe) + " at VI_UE " + fmt("%.4f", ctx.ue) + "; oblivious ";
    if (match) {
        o.detail += "best VI_OE " + fmt("%.4f", match->second.oe) + " at VI_UE " + fmt("%.4f", match->second.ue) +
                    " (delta " + fmt("%.2f", match->first) + ")";
    } else {
        o.detail += "never reaches that VI_UE";
    }
    o.detail += "; blobs contained " + std::to_string(contained) + "/" + std::to_string(blobs) + " (" +
                fmt("%.1f", 100.0 * share) + "%)";
    return o;
}

// ---- 7 ----------------------------------------------------------------------

Outcome mito_ordering()
{
    Outcome o;
    std::size_t order_violations = 0;
    std::size_t mito_mito = 0;
    std::size_t phase1_impure = 0;
    std::size_t non_monotone = 0;
    std::size_t checked = 0;
    std::vector<std::size_t> absorbed_totals(3, 0);
    const std::vector<double> deltas{0.2, 0.5, 0.8};

    for (std::size_t s = 0; s < 10; ++s) {
        const Instance& in = test_instances()[s];
        std::vector<std::size_t> absorbed;
        for (std::size_t k = 0; k < deltas.size(); ++k) {
            cada::ContextConfig c;
            c.delta_m = deltas[k];
            cada::PipelineHooks hooks;
            hooks.mito.on_examine = [&](const RegionGraph& g, const cada::BoundaryEdge& e, double h) {
                if (h > deltas[k]) {
                    return;
                }
                ++checked;
                const double rho = cada::overlap_ratio(g, e);
                for (const auto& [id, f] : g.edges()) {
                    if (f.flag == cada::EdgeFlag::Active && cada::is_mito_cyto(g, f) &&
                        cada::overlap_ratio(g, f) > rho + kRhoTol) {
                        ++order_violations;
                        break;
                    }
                }
            };
            const auto r = cada::run_context_pipeline(in.ws, in.v.channels, cada::mean_boundary_confidence, c, hooks);
            absorbed.push_back(r.mito.steps.size());
            absorbed_totals[k] += r.mito.steps.size();

            // Replay both traces against the initial partition.
            RegionGraph g0 = cada::build_rag(in.ws, in.v.channels);
            cada::partition_superpixels(g0, c.theta_mito);
            std::map<Label, cada::RegionType> type;
            for (const auto& [id, node] : g0.nodes()) {
                type[id] = node.type;
            }
            for (const auto& step : r.cyto.steps) {
                phase1_impure += type[step.kept] != cada::RegionType::Cyto || type[step.absorbed] != cada::RegionType::Cyto;
            }
            for (const auto& step : r.mito.steps) {
                mito_mito += type[step.kept] == cada::RegionType::Mito && type[step.absorbed] == cada::RegionType::Mito;
                type[step.kept] = cada::RegionType::Cyto;
            }
        }
        non_monotone += !std::is_sorted(absorbed.begin(), absorbed.end());
    }
    o.pass = order_violations == 0 && mito_mito == 0 && phase1_impure == 0 && non_monotone == 0 && checked > 0;
    o.detail = std::to_string(checked) + " phase-2 merges, " + std::to_string(order_violations) +
               " out of rho order, " + std::to_string(mito_mito) + " mito-mito merges; absorbed at delta_m 0.2/0.5/0.8: " +
               std::to_string(absorbed_totals[0]) + "/" + std::to_string(absorbed_totals[1]) + "/" +
               std::to_string(absorbed_totals[2]) + ", " + std::to_string(non_monotone) + " non-monotone seeds";
    return o;
}

// ---- 8 ----------------------------------------------------------------------

Outcome training_regimes()
{
    Outcome o;
    auto timed = [](std::size_t iterations, bool accumulate, cada::TrainResult& out) {
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            out = train(true, iterations, accumulate);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };
    train_instance();
    cada::TrainResult lash;
    cada::TrainResult accumulated;
    const double t_l = timed(1, false, lash);
    const double t_a = timed(3, true, accumulated);

    auto vi_sum = [](const cada::Forest& f) {
        double total = 0;
        for (std::size_t s = 0; s < 10; ++s) {
            const Instance& in = test_instances()[s];
            cada::ContextConfig c;
            c.delta_c = 0.15;
            const auto r = cada::run_context_pipeline(in.ws, in.v.channels, f, c);
            const auto m = cada::evaluate(r.segmentation, in.v.cells);
            total += m.vi.under + m.vi.over;
        }
        return total / 10.0;
    };
    const double vi_l = vi_sum(lash.forest);
    const double vi_a = vi_sum(accumulated.forest);
    const double ratio = t_l / t_a;
    const double rel = std::fabs(vi_l - vi_a) / vi_a;
    o.pass = ratio <= kTimeRatio && rel <= kViSumRel;
    o.detail = "train time " + fmt("%.3f", t_l) + " s vs " + fmt("%.3f", t_a) + " s (ratio " + fmt("%.3f", ratio) +
               "), VI sum " + fmt("%.4f", vi_l) + " vs " + fmt("%.4f", vi_a) + " (" + fmt("%.1f", 100.0 * rel) + "%)";
    return o;
}

// ---- 9 ----------------------------------------------------------------------

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(CADA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism()
{
    Outcome o;
    const fs::path root = fs::temp_directory_path() / ("cada_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string args = " --seed 9 --train-seed 1009 --n-trees 20 --iterations 2 --accumulate";
    std::vector<fs::path> runs{root / "a", root / "b"};
    for (const auto& r : runs) {
        fs::create_directories(r);
        if (run_cli("pipeline" + args + " --out " + r.string()) != 0) {
            o.pass = false;
            o.detail = "pipeline run failed";
            fs::remove_all(root);
            return o;
        }
    }
    std::size_t files = 0;
    std::size_t differing = 0;
    std::set<std::string> kinds;
    for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(entry.path(), runs[0]);
        std::string a = slurp(runs[0] / rel);
        std::string b = slurp(runs[1] / rel);
        if (rel.filename() == "config.json") {
            // The echo records the output directory, which differs by design.
            auto ja = nlohmann::json::parse(a);
            auto jb = nlohmann::json::parse(b);
            ja.erase("out");
            jb.erase("out");
            a = ja.dump();
            b = jb.dump();
        }
        ++files;
        differing += a != b || a.empty();
        kinds.insert(rel.filename().string());
    }
    fs::remove_all(root);
    const bool covered = kinds.count("labels.segv") && kinds.count("forest.json") &&
                         kinds.count("trace_cyto.csv") && kinds.count("trace_mito.csv") &&
                         kinds.count("segmentation.segv") && kinds.count("gt.segv");
    o.pass = differing == 0 && covered && files > 0;
    o.detail = std::to_string(files - differing) + "/" + std::to_string(files) + " output files byte-identical";
    return o;
}

struct Criterion {
    int number;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "metric exactness", 1, metric_exactness},
        {2, "RAG rebuild equivalence", 30, rag_rebuild},
        {3, "mergeable-feature oracle", 10, feature_oracle},
        {4, "delayed engine fidelity", 60, engine_fidelity},
        {5, "delayed vs standard under-segmentation", 300, delayed_vs_standard},
        {6, "context-aware benefit", 600, context_benefit},
        {7, "mito-phase ordering", 60, mito_ordering},
        {8, "training-regime behavior", 600, training_regimes},
        {9, "determinism", 120, determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }

    int failed = 0;
    for (const Criterion& c : all) {
        if (!wanted.empty() && !wanted.count(c.number)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double took = seconds_since(t0);
        const bool pass = o.pass && took < c.limit_s;
        failed += !pass;
        std::printf("criterion %d: %s  %s; %.2f s (limit %.0f s)\n", c.number, pass ? "PASS" : "FAIL", c.name,
                    took, c.limit_s);
        std::printf("    %s\n", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
