// sentiscope: clean, score, aggregate, plot and cross-map social media series.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sentiscope/ccm.hpp"
#include "sentiscope/esn.hpp"
#include "sentiscope/io.hpp"
#include "sentiscope/pipeline.hpp"
#include "sentiscope/series.hpp"
#include "sentiscope/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sentiscope;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string data_dir = SENTISCOPE_DATA_DIR;
    std::string valence;
    std::string emotions;
    std::string stopwords;
    std::string english;

    fs::path data(const std::string& override_path, const char* name) const {
        return override_path.empty() ? fs::path(data_dir) / name : fs::path(override_path);
    }

    Resources resources() const {
        return Resources::load(data(valence, "vader_lexicon.txt"), data(emotions, "nrc_emotion_lexicon.txt"),
                               data(stopwords, "stopwords_en.txt"), data(english, "english_words.txt"));
    }

    fs::path output(const std::string& name) const {
        fs::create_directories(out);
        return fs::path(out) / name;
    }
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    return os;
}

void note_written(const fs::path& p) { std::cout << "wrote " << p.string() << '\n'; }

std::optional<DateRange> date_range(const std::string& from, const std::string& to) {
    if (from.empty() && to.empty()) return std::nullopt;
    if (from.empty() || to.empty()) throw Error("--from and --to must be given together");
    DateRange r{Date::parse(from), Date::parse(to)};
    if (r.to < r.from) throw Error("--to precedes --from");
    return r;
}

// --- clean / score / aggregate ------------------------------------------------

struct CleanOpts {
    std::string in;
    double max_malformed = 0.01;
};

/// Returns false when too many lines were malformed.
bool run_clean(const Globals& g, const CleanOpts& o, std::vector<CorpusRecord>& cleaned, CleanReport& report) {
    auto in = open_in(o.in);
    auto read = read_corpus_jsonl(in, o.in);
    const auto res = g.resources();
    cleaned = clean_corpus(read.records, res.text_pipeline(), report);
    report.input += read.malformed;
    report.malformed = read.malformed;
    if (read.malformed_fraction() > o.max_malformed) {
        std::cerr << "error: " << read.malformed << " of " << read.lines << " lines malformed (limit "
                  << o.max_malformed * 100 << "%)\n";
        return false;
    }
    return true;
}

void emit_clean(const Globals& g, const std::vector<CorpusRecord>& cleaned, const CleanReport& report) {
    const auto corpus = g.output("cleaned.jsonl"), rep = g.output("clean_report.csv");
    {
        auto os = open_out(corpus);
        for (const auto& r : cleaned) write_corpus_record(os, r);
    }
    {
        auto os = open_out(rep);
        write_clean_report(os, report);
    }
    note_written(corpus);
    note_written(rep);
}

std::string scored_csv_text(const Globals& g, const std::vector<CorpusRecord>& records) {
    const auto scored = score_corpus(records, g.resources());
    std::ostringstream os;
    write_scored_csv(os, scored);
    return os.str();
}

struct AggregateOpts {
    std::string in;
    std::vector<std::string> cities;
    std::vector<std::string> keywords;
    std::string from, to;
    std::vector<std::string> features = {"compound_mean", "tweet_count"};
    std::string cases;
    std::string periods;
};

void run_aggregate(const Globals& g, const AggregateOpts& o, std::vector<ScoredPost> posts) {
    if (!o.keywords.empty()) {
        std::vector<ScoredPost> keep;
        for (const auto& p : posts)
            for (const auto& k : o.keywords)
                if (!keyword_filter(std::span(&p, 1), k).empty()) {
                    keep.push_back(p);
                    break;
                }
        posts = std::move(keep);
    }
    const auto cities = o.cities.empty() ? cities_of(posts) : o.cities;
    auto range = date_range(o.from, o.to);
    if (!range) {
        // One shared span so every city's series lines up day for day.
        for (const auto& p : posts) {
            if (std::find(cities.begin(), cities.end(), p.city) == cities.end()) continue;
            if (!range) range = DateRange{p.date, p.date};
            range->from = std::min(range->from, p.date);
            range->to = std::max(range->to, p.date);
        }
    }
    std::vector<CitySeries> series;
    std::vector<CitySeries> cases;
    if (!o.cases.empty()) {
        auto in = open_in(o.cases);
        cases = read_cases_csv(in, o.cases, range);
    }
    for (const auto& city : cities) {
        for (const auto& f : o.features) {
            const Feature feat = parse_feature(f);
            if (feat != Feature::cases) {
                series.push_back(aggregate_daily(posts, city, feat, range));
                continue;
            }
            auto it = std::find_if(cases.begin(), cases.end(), [&](const CitySeries& s) { return s.city == city; });
            if (it == cases.end()) throw Error("no case counts for '" + city + "' (pass --cases)");
            series.push_back(*it);
        }
    }
    const auto out = g.output("series.csv");
    {
        auto os = open_out(out);
        write_series_csv(os, series);
    }
    note_written(out);
    if (!o.periods.empty()) {
        const auto cfg = PeriodConfig::parse(detail::read_file(o.periods), o.periods);
        std::vector<ScoredPost> in_scope;
        for (const auto& p : posts)
            if (std::find(cities.begin(), cities.end(), p.city) != cities.end()) in_scope.push_back(p);
        const auto rows = period_summary(in_scope, cfg);
        const auto path = g.output("period_summary.csv");
        auto os = open_out(path);
        write_period_summary_csv(os, rows);
        note_written(path);
    }
}

std::vector<CitySeries> load_series(const std::string& path) {
    auto in = open_in(path);
    return read_series_csv(in, path);
}

const CitySeries& pick_series(const std::vector<CitySeries>& all, const std::string& city, const std::string& feature) {
    for (const auto& s : all)
        if (s.city == city && s.feature == feature) return s;
    throw Error("no series for city '" + city + "' and feature '" + feature + "'");
}

std::vector<std::string> series_cities(const std::vector<CitySeries>& all) {
    std::vector<std::string> out;
    for (const auto& s : all)
        if (std::find(out.begin(), out.end(), s.city) == out.end()) out.push_back(s.city);
    return out;
}

/// Input and target restricted to their common date range.
std::pair<std::vector<double>, std::vector<double>> aligned(const CitySeries& a, const CitySeries& b) {
    const Date from = std::max(a.start, b.start), to = std::min(a.end(), b.end());
    if (to < from) throw Error("series " + a.city + "/" + a.feature + " and " + b.feature + " do not overlap");
    const auto n = static_cast<std::size_t>(to - from + 1);
    const auto oa = static_cast<std::size_t>(from - a.start), ob = static_cast<std::size_t>(from - b.start);
    return {{a.values.begin() + static_cast<long>(oa), a.values.begin() + static_cast<long>(oa + n)},
            {b.values.begin() + static_cast<long>(ob), b.values.begin() + static_cast<long>(ob + n)}};
}

// --- reservoir options ----------------------------------------------------------

void add_reservoir_options(CLI::App* app, ReservoirConfig& c) {
    app->add_option("--size", c.size, "Reservoir size N")->capture_default_str();
    app->add_option("--spectral-radius", c.spectral_radius, "Target spectral radius of A")->capture_default_str();
    app->add_option("--leak", c.leak, "Leak rate")->capture_default_str();
    app->add_option("--input-scale", c.input_scale, "Input weight scale")->capture_default_str();
    app->add_option("--sparsity", c.sparsity, "Nonzero probability of A and W_in entries")->capture_default_str();
    app->add_option("--ridge", c.ridge, "Ridge penalty of the readout")->capture_default_str();
    app->add_option("--washout", c.washout, "Leading steps excluded from training")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentiscope: sentiment series and echo-state cross mapping"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file with option values");
    app.get_config_ptr()->envname("SENTISCOPE_CONFIG");

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random draw")->envname("SENTISCOPE_SEED")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->envname("SENTISCOPE_OUT")->capture_default_str();
    app.add_option("--data-dir", g.data_dir, "Directory with the bundled lexicons")
        ->envname("SENTISCOPE_DATA_DIR")
        ->capture_default_str();
    app.add_option("--valence-lexicon", g.valence, "Valence lexicon (default: <data-dir>/vader_lexicon.txt)");
    app.add_option("--emotion-lexicon", g.emotions, "Emotion lexicon (default: <data-dir>/nrc_emotion_lexicon.txt)");
    app.add_option("--stopwords", g.stopwords, "Stopword list (default: <data-dir>/stopwords_en.txt)");
    app.add_option("--english-words", g.english,
                   "Word list for the language rule (default: <data-dir>/english_words.txt)");

    CleanOpts clean;
    auto* c_clean = app.add_subcommand("clean", "Apply the cleaning rules to a JSON-lines corpus");
    c_clean->add_option("--in", clean.in, "Raw corpus (JSON lines)")->required();
    c_clean->add_option("--max-malformed", clean.max_malformed, "Tolerated malformed-line fraction")
        ->capture_default_str();

    std::string score_in;
    auto* c_score = app.add_subcommand("score", "Score a cleaned corpus");
    c_score->add_option("--in", score_in, "Cleaned corpus (JSON lines)")->required();

    AggregateOpts agg;
    auto add_agg = [&](CLI::App* sub) {
        sub->add_option("--city", agg.cities, "Cities to aggregate (default: all)");
        sub->add_option("--keyword", agg.keywords, "Keep posts containing any keyword");
        sub->add_option("--from", agg.from, "First day (YYYY-MM-DD)");
        sub->add_option("--to", agg.to, "Last day (YYYY-MM-DD)");
        sub->add_option("--feature", agg.features, "Features to aggregate")->capture_default_str();
        sub->add_option("--cases", agg.cases, "Case table CSV (date,city,cases)");
        sub->add_option("--periods", agg.periods, "Period config for stratified summaries");
    };
    auto* c_agg = app.add_subcommand("aggregate", "Daily per-city series from a scored CSV");
    c_agg->add_option("--in", agg.in, "Scored CSV")->required();
    add_agg(c_agg);

    std::string heat_in, heat_feature = "compound_mean";
    std::vector<std::string> heat_cities;
    auto* c_heat = app.add_subcommand("heatmap", "City x day heatmap (CSV and SVG) from a series CSV");
    c_heat->add_option("--in", heat_in, "Series CSV")->required();
    c_heat->add_option("--feature", heat_feature, "Feature to plot")->capture_default_str();
    c_heat->add_option("--city", heat_cities, "Rows to include (default: all)");

    std::string ccm_in, ccm_x, ccm_y;
    std::vector<std::string> ccm_cities;
    ReservoirConfig ccm_cfg;
    LagGrid ccm_grid;
    CrossMapOptions ccm_opt;
    auto* c_ccm = app.add_subcommand("ccm", "Lag-scanned cross mapping between two series");
    c_ccm->add_option("--in", ccm_in, "Series CSV")->required();
    c_ccm->add_option("--x", ccm_x, "Feature used as X")->required();
    c_ccm->add_option("--y", ccm_y, "Feature used as Y")->required();
    c_ccm->add_option("--city", ccm_cities, "Cities to pool (default: all)");
    c_ccm->add_option("--tau-min", ccm_grid.tau_min, "Smallest lag")->capture_default_str();
    c_ccm->add_option("--tau-max", ccm_grid.tau_max, "Largest lag")->capture_default_str();
    c_ccm->add_option("--folds", ccm_opt.folds, "Blocks for out-of-fold prediction (1: in-sample)")
        ->capture_default_str();
    add_reservoir_options(c_ccm, ccm_cfg);

    std::string gs_in, gs_input, gs_target;
    std::vector<std::string> gs_cities;
    GridSpec gs = GridSpec::defaults();
    auto* c_gs = app.add_subcommand("gridsearch", "Leave-one-city-out grid search of reservoir settings");
    c_gs->add_option("--in", gs_in, "Series CSV")->required();
    c_gs->add_option("--input", gs_input, "Input feature")->required();
    c_gs->add_option("--target", gs_target, "Target feature")->required();
    c_gs->add_option("--city", gs_cities, "Units (default: all cities)");
    c_gs->add_option("--tau", gs.tau, "Lag between input and target")->capture_default_str();
    c_gs->add_option("--washout", gs.washout, "Leading steps excluded from training")->capture_default_str();
    c_gs->add_option("--grid-spectral-radius", gs.spectral_radius)->capture_default_str();
    c_gs->add_option("--grid-leak", gs.leak)->capture_default_str();
    c_gs->add_option("--grid-size", gs.size)->capture_default_str();
    c_gs->add_option("--grid-sparsity", gs.sparsity)->capture_default_str();
    c_gs->add_option("--grid-ridge", gs.ridge)->capture_default_str();
    c_gs->add_option("--grid-input-scale", gs.input_scale)->capture_default_str();

    std::string synth_kind = "logistic";
    CoupledMapConfig synth_cfg;
    double synth_phi = 0.5;
    auto* c_synth = app.add_subcommand("synth", "Synthetic series pair with known coupling");
    c_synth->add_option("--kind", synth_kind, "logistic or ar1")
        ->check(CLI::IsMember({"logistic", "ar1"}))
        ->capture_default_str();
    c_synth->add_option("--length", synth_cfg.length, "Series length")->capture_default_str();
    c_synth->add_option("--rx", synth_cfg.r_x)->capture_default_str();
    c_synth->add_option("--ry", synth_cfg.r_y)->capture_default_str();
    c_synth->add_option("--cxy", synth_cfg.c_xy, "Coupling of Y into X")->capture_default_str();
    c_synth->add_option("--cyx", synth_cfg.c_yx, "Coupling of X into Y")->capture_default_str();
    c_synth->add_option("--delay", synth_cfg.delay)->capture_default_str();
    c_synth->add_option("--noise", synth_cfg.noise_sd, "Observation noise sd")->capture_default_str();
    c_synth->add_option("--phi", synth_phi, "AR(1) coefficient")->capture_default_str();

    CleanOpts pipe_clean;
    auto* c_pipe = app.add_subcommand("pipeline", "clean, score and aggregate in one run");
    c_pipe->add_option("--in", pipe_clean.in, "Raw corpus (JSON lines)")->required();
    c_pipe->add_option("--max-malformed", pipe_clean.max_malformed)->capture_default_str();
    add_agg(c_pipe);

    CLI11_PARSE(app, argc, argv);

    // Resolved values of the global options and of the invoked subcommand only.
    {
        const std::string prefix = app.get_subcommands().front()->get_name() + ".";
        std::istringstream all(app.config_to_str(true, false));
        std::cout << "# resolved configuration\n";
        for (std::string line; std::getline(all, line);) {
            const auto eq = line.find('=');
            const auto key = line.substr(0, eq);
            if (key.find('.') == std::string::npos || key.starts_with(prefix)) std::cout << line << '\n';
        }
        std::cout << "# seed " << g.seed << '\n';
    }

    try {
        if (*c_clean) {
            std::vector<CorpusRecord> cleaned;
            CleanReport report;
            const bool ok = run_clean(g, clean, cleaned, report);
            emit_clean(g, cleaned, report);
            return ok ? 0 : 1;
        }
        if (*c_score) {
            auto in = open_in(score_in);
            const auto read = read_corpus_jsonl(in, score_in);
            if (read.malformed) throw Error(score_in + ": " + std::to_string(read.malformed) + " malformed line(s)");
            const auto path = g.output("scored.csv");
            auto os = open_out(path);
            os << scored_csv_text(g, read.records);
            note_written(path);
            return 0;
        }
        if (*c_agg) {
            auto in = open_in(agg.in);
            run_aggregate(g, agg, read_scored_csv(in, agg.in));
            return 0;
        }
        if (*c_pipe) {
            std::vector<CorpusRecord> cleaned;
            CleanReport report;
            const bool ok = run_clean(g, pipe_clean, cleaned, report);
            emit_clean(g, cleaned, report);
            if (!ok) return 1;
            // Scores go through their CSV form so the series match a staged run byte for byte.
            const std::string scored = scored_csv_text(g, cleaned);
            const auto path = g.output("scored.csv");
            {
                auto os = open_out(path);
                os << scored;
            }
            note_written(path);
            std::istringstream is(scored);
            run_aggregate(g, agg, read_scored_csv(is, path.string()));
            return 0;
        }
        if (*c_heat) {
            const auto all = load_series(heat_in);
            std::vector<CitySeries> rows;
            for (const auto& s : all)
                if (s.feature == heat_feature &&
                    (heat_cities.empty() ||
                     std::find(heat_cities.begin(), heat_cities.end(), s.city) != heat_cities.end()))
                    rows.push_back(s);
            if (rows.empty()) throw Error("no series with feature '" + heat_feature + "'");
            const auto m = heatmap_matrix(rows);
            const auto csv_path = g.output("heatmap.csv"), svg_path = g.output("heatmap.svg");
            {
                auto os = open_out(csv_path);
                write_heatmap_csv(os, m);
            }
            {
                auto os = open_out(svg_path);
                write_heatmap_svg(os, m);
            }
            note_written(csv_path);
            note_written(svg_path);
            return 0;
        }
        if (*c_ccm) {
            ccm_cfg.seed = g.seed;
            const auto all = load_series(ccm_in);
            const auto cities = ccm_cities.empty() ? series_cities(all) : ccm_cities;
            std::vector<std::pair<std::vector<double>, std::vector<double>>> data;
            for (const auto& city : cities) data.push_back(aligned(pick_series(all, city, ccm_x), pick_series(all, city, ccm_y)));
            std::vector<CrossMapPair> xy, yx;
            for (const auto& [x, y] : data) {
                xy.push_back({x, y});
                yx.push_back({y, x});
            }
            std::vector<LagCorrelationCurve> curves;
            curves.push_back(cross_map_curve(xy, ccm_cfg, ccm_grid, ccm_opt, ccm_x + "->" + ccm_y));
            curves.push_back(cross_map_curve(yx, ccm_cfg, ccm_grid, ccm_opt, ccm_y + "->" + ccm_x));
            const auto verdict = classify(curves[0], curves[1]);
            const auto csv_path = g.output("ccm_curves.csv"), v_path = g.output("ccm_verdict.txt");
            {
                auto os = open_out(csv_path);
                write_curves_csv(os, curves);
            }
            {
                auto os = open_out(v_path);
                os << "x: " << ccm_x << "\ny: " << ccm_y << '\n';
                write_verdict(os, verdict, curves[0], curves[1]);
            }
            std::cout << "classification: " << to_string(verdict.classification) << '\n';
            note_written(csv_path);
            note_written(v_path);
            return 0;
        }
        if (*c_gs) {
            gs.seed = g.seed;
            const auto all = load_series(gs_in);
            const auto cities = gs_cities.empty() ? series_cities(all) : gs_cities;
            std::vector<CvUnit> units;
            for (const auto& city : cities) {
                auto [x, y] = aligned(pick_series(all, city, gs_input), pick_series(all, city, gs_target));
                units.push_back({city, std::move(x), std::move(y)});
            }
            const auto report = loo_cv_grid_search(std::move(units), gs);
            const auto csv_path = g.output("gridsearch.csv"), w_path = g.output("gridsearch_winner.txt");
            {
                auto os = open_out(csv_path);
                write_cv_csv(os, report);
            }
            note_written(csv_path);
            const auto& best = report.best();
            auto os = open_out(w_path);
            os << "config = " << *report.winner << "\nspectral_radius = " << csv::number(best.spectral_radius)
               << "\nleak = " << csv::number(best.leak) << "\nsize = " << best.size
               << "\nsparsity = " << csv::number(best.sparsity) << "\nridge = " << csv::number(best.ridge)
               << "\ninput_scale = " << csv::number(best.input_scale)
               << "\nmean_nrmse = " << csv::number(report.scores[*report.winner].mean_nrmse) << '\n';
            note_written(w_path);
            return 0;
        }
        if (*c_synth) {
            std::vector<CitySeries> out;
            if (synth_kind == "logistic") {
                synth_cfg.seed = g.seed;
                auto pair = gen_coupled_logistic(synth_cfg);
                out.push_back(as_series(std::move(pair.x), "synthetic", "x"));
                out.push_back(as_series(std::move(pair.y), "synthetic", "y"));
            } else {
                out.push_back(as_series(gen_ar1(synth_phi, synth_cfg.length, derive_seed(g.seed, 0)), "synthetic", "x"));
                out.push_back(as_series(gen_ar1(synth_phi, synth_cfg.length, derive_seed(g.seed, 1)), "synthetic", "y"));
            }
            const auto path = g.output("synth.csv");
            auto os = open_out(path);
            write_series_csv(os, out);
            note_written(path);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
