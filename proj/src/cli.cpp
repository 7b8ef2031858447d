#include "dtn/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "dtn/config_file.hpp"
#include "dtn/pca.hpp"
#include "dtn/pipeline.hpp"
#include "dtn/plot.hpp"
#include "dtn/synthetic.hpp"

namespace dtn {

namespace fs = std::filesystem;

namespace {

/// One config file serves every subcommand; unknown keys are rejected
/// whichever command reads it.
ConfigFile load_config(const std::string& path) {
  if (path.empty()) return {};
  ConfigFile probe = ConfigFile::read(path);
  CrossTestConfig cross;
  SyntheticSpec spec = SyntheticSpec::defaults();
  probe.apply(cross);
  probe.apply(spec);
  probe.check_all_used();
  return ConfigFile::read(path);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Dataset train_rows(const Dataset& d) {
  return d.filter([](const SampleRecord& r) { return r.split == Split::Train; });
}

struct SynthArgs {
  std::string out, config;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec = SyntheticSpec::defaults();
  ConfigFile cfg = load_config(a.config);
  cfg.apply(spec);
  if (a.seed) spec.seed = *a.seed;
  const SyntheticData d = write_synthetic(spec, a.out);
  out << "wrote " << d.source.size() << " source and " << d.target.size() << " target frames to "
      << a.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string source, target, out, config, objective;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::size_t labeled = 1;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig tc;
  ConfigFile cfg = load_config(a.config);
  cfg.apply(tc);
  if (!a.objective.empty()) tc.objective = parse_objective(a.objective);
  if (a.lambda) tc.lambda = *a.lambda;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.seed) tc.seed = *a.seed;
  tc.validate();
  const std::size_t side = tc.architecture.input_side;
  const Dataset source = train_rows(load_manifest(a.source, side));
  Dataset pool;
  std::vector<std::string> labeled;
  if (tc.objective != Objective::StdCnn) {
    if (a.target.empty()) throw ValidationError("--target is required for " + std::string(to_string(tc.objective)));
    const Dataset target = train_rows(load_manifest(a.target, side));
    labeled = select_subjects(target, a.labeled, tc.seed);
    pool = restrict_to_subjects(target, labeled);
  }
  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "train.tsv", std::ios::binary);
  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint = fs::path(a.out) / "model.ckpt";
  const TrainResult r = train(source, pool, tc, hooks);
  std::string subjects;
  for (const auto& s : labeled) subjects += s + "\n";
  write_file(fs::path(a.out) / "labeled_subjects.txt", subjects);
  out << "trained " << to_string(tc.objective) << " for " << r.steps << " steps; final epoch loss "
      << std::setprecision(6) << r.epoch_loss.back() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model, data, out, scheme = "predefined";
  std::uint64_t split_seed = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const ModelParams params = load_checkpoint(a.model);
  const Dataset data = load_manifest(a.data, params.config.input_side);
  const ProtocolViews v = split_protocol(data, parse_scheme(a.scheme), a.split_seed);
  const EvalReport rep = evaluate(params, v.devel, v.test);
  std::ostringstream scores;
  write_scores(rep.test_videos, scores);
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "scores.tsv", scores.str());
  write_file(fs::path(a.out) / "report.json", report_to_json(rep));
  out << std::setprecision(4) << "tau " << rep.threshold << "  FAR " << rep.far << "  FRR "
      << rep.frr << "  HTER " << rep.hter << "  AUC " << rep.auc << "\n";
  return kExitOk;
}

struct CrossArgs {
  std::string source, target, out, config, seeds, source_scheme, target_scheme;
  std::optional<std::size_t> labeled, epochs;
};

int cmd_cross_test(const CrossArgs& a, std::ostream& out) {
  CrossTestConfig c;
  ConfigFile cfg = load_config(a.config);
  cfg.apply(c);
  if (!a.seeds.empty()) c.seeds = parse_seed_list(a.seeds);
  if (a.labeled) c.labeled_subjects = *a.labeled;
  if (a.epochs) c.train.epochs = *a.epochs;
  if (!a.source_scheme.empty()) c.source_scheme = parse_scheme(a.source_scheme);
  if (!a.target_scheme.empty()) c.target_scheme = parse_scheme(a.target_scheme);
  c.train.validate();
  const std::size_t side = c.train.architecture.input_side;
  const Dataset source = load_manifest(a.source, side);
  const Dataset target = load_manifest(a.target, side);
  const CrossTestResult r = cross_test(source, target, c, fs::path(a.out));
  out << std::left << std::setw(16) << "method" << std::setw(14) << "median HTER" << "median AUC\n";
  for (const MethodSummary& s : r.summary) {
    out << std::setw(16) << to_string(s.objective) << std::setw(14) << std::fixed
        << std::setprecision(4) << s.median_hter << s.median_auc << "\n";
  }
  return kExitOk;
}

struct ProjectArgs {
  std::string model, out;
  std::vector<std::string> data;
  std::size_t components = 3;
};

int cmd_project(const ProjectArgs& a, std::ostream& out) {
  const ModelParams params = load_checkpoint(a.model);
  std::vector<Dataset> sets;
  std::size_t total = 0;
  for (const auto& path : a.data) {
    sets.push_back(load_manifest(path, params.config.input_side));
    total += sets.back().size();
  }
  const std::size_t f = params.config.feature_width();
  std::vector<double> stacked;
  std::vector<const SampleRecord*> rows;
  for (const Dataset& d : sets) {
    const Tensor feats = extract_features(params, d.all_images());
    stacked.insert(stacked.end(), feats.values().begin(), feats.values().end());
    for (const SampleRecord& r : d.rows()) rows.push_back(&r);
  }
  const PcaProjection p = pca_project(Tensor({total, f}, std::move(stacked)), a.components);

  std::ostringstream tsv;
  tsv << std::setprecision(17) << "domain\tlabel\tmodality\tsubject\tsplit\tvideo\tframe";
  for (std::size_t c = 0; c < a.components; ++c) tsv << "\tpc" << c + 1;
  tsv << "\n";
  std::map<std::string, Series> groups;
  for (std::size_t i = 0; i < total; ++i) {
    const SampleRecord& r = *rows[i];
    tsv << to_string(r.domain) << '\t' << to_string(r.label) << '\t' << r.modality << '\t' << r.subject
        << '\t' << to_string(r.split) << '\t' << r.video << '\t' << r.frame;
    for (std::size_t c = 0; c < a.components; ++c) tsv << '\t' << p.projected.data()[i * a.components + c];
    tsv << "\n";
    const std::string key = std::string(to_string(r.domain)) + " " + r.modality;
    Series& s = groups[key];
    s.name = key;
    s.x.push_back(p.projected.data()[i * a.components]);
    s.y.push_back(a.components > 1 ? p.projected.data()[i * a.components + 1] : 0.0);
  }
  std::ostringstream var;
  var << std::setprecision(17) << "component\tvariance\n";
  for (std::size_t c = 0; c < a.components; ++c) var << "pc" << c + 1 << '\t' << p.variance[c] << "\n";
  std::vector<Series> series;
  for (auto& [k, s] : groups) series.push_back(std::move(s));
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "projection.tsv", tsv.str());
  write_file(fs::path(a.out) / "variance.tsv", var.str());
  write_file(fs::path(a.out) / "projection.svg",
             svg_scatter_plot("Feature projection", "pc1", "pc2", series));
  out << "projected " << total << " samples onto " << a.components << " components\n";
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> logs, reports;
  std::string out;
};

/// Per-epoch means of every numeric column of a training log.
std::pair<std::vector<std::string>, std::map<long, std::vector<double>>> epoch_means(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("epoch\tbatch")) {
    throw ValidationError(path.string() + ": not a training log");
  }
  std::vector<std::string> columns;
  {
    std::istringstream h(line);
    std::string c;
    while (std::getline(h, c, '\t')) columns.push_back(c);
  }
  std::map<long, std::vector<double>> sums;
  std::map<long, double> counts;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream row(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(row, cell, '\t')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError(path.string() + " line " + std::to_string(n) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != columns.size()) {
      throw ValidationError(path.string() + " line " + std::to_string(n) + ": wrong column count");
    }
    const long epoch = static_cast<long>(v[0]);
    auto& s = sums[epoch];
    s.resize(columns.size() - 2, 0.0);
    for (std::size_t c = 2; c < v.size(); ++c) s[c - 2] += v[c];
    counts[epoch] += 1;
  }
  for (auto& [e, s] : sums)
    for (double& x : s) x /= counts[e];
  columns.erase(columns.begin(), columns.begin() + 2);
  return {columns, sums};
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.logs.empty() && a.reports.empty()) throw ValidationError("nothing to report: give --log or --report");
  std::ostringstream loss_tsv, rep_tsv;
  loss_tsv << std::setprecision(17);
  rep_tsv << std::setprecision(17);
  std::vector<Series> curves;
  if (!a.logs.empty()) loss_tsv << "log\tepoch\tcolumn\tmean\n";
  for (const auto& path : a.logs) {
    const auto [columns, means] = epoch_means(path);
    Series total{path, {}, {}};
    for (const auto& [epoch, values] : means) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        loss_tsv << path << '\t' << epoch << '\t' << columns[c] << '\t' << values[c] << "\n";
      }
      total.x.push_back(static_cast<double>(epoch));
      total.y.push_back(values.back());
    }
    curves.push_back(std::move(total));
  }
  std::vector<std::string> labels;
  std::vector<double> hters;
  if (!a.reports.empty()) rep_tsv << "report\tthreshold\tfar\tfrr\thter\tauc\n";
  for (const auto& path : a.reports) {
    const EvalReport r = report_from_json(read_file(path));
    rep_tsv << path << '\t' << r.threshold << '\t' << r.far << '\t' << r.frr << '\t' << r.hter << '\t'
            << r.auc << "\n";
    labels.push_back(fs::path(path).parent_path().filename().string());
    if (labels.back().empty()) labels.back() = path;
    hters.push_back(r.hter);
  }
  fs::create_directories(a.out);
  if (!a.logs.empty()) {
    write_file(fs::path(a.out) / "loss_summary.tsv", loss_tsv.str());
    write_file(fs::path(a.out) / "loss_curves.svg",
               svg_line_plot("Mean training loss per epoch", "epoch", "total loss", curves));
  }
  if (!a.reports.empty()) {
    write_file(fs::path(a.out) / "reports.tsv", rep_tsv.str());
    write_file(fs::path(a.out) / "hter.svg", svg_bar_chart("Test HTER", "HTER", labels, hters));
  }
  out << "summarized " << a.logs.size() << " logs and " << a.reports.size() << " reports\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-adaptive face anti-spoofing toolkit", "dtn"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write the synthetic two-domain benchmark");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--config", synth.config, "key=value config file");
  s->add_option("--seed", synth.seed, "Override synth.seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train on a source manifest plus sparse target subjects");
  t->add_option("--source", tr.source, "Source manifest")->required();
  t->add_option("--target", tr.target, "Target manifest");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--config", tr.config, "key=value config file");
  t->add_option("--objective", tr.objective, "stdcnn | unsupervised | semisupervised");
  t->add_option("--lambda", tr.lambda, "Domain loss weight");
  t->add_option("--epochs", tr.epochs, "Training epochs");
  t->add_option("--seed", tr.seed, "Training seed");
  t->add_option("--labeled-subjects", tr.labeled, "Target subjects used for training")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a manifest: tau from devel, metrics on test");
  e->add_option("--model", ev.model, "Checkpoint")->required();
  e->add_option("--data", ev.data, "Manifest")->required();
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_option("--scheme", ev.scheme, "predefined | equal-split-devel")->capture_default_str();
  e->add_option("--split-seed", ev.split_seed, "Seed of the devel/test split")->capture_default_str();

  CrossArgs cr;
  auto* c = app.add_subcommand("cross-test", "Train on A, evaluate on B for every objective and seed");
  c->add_option("--source", cr.source, "Source manifest (A)")->required();
  c->add_option("--target", cr.target, "Target manifest (B)")->required();
  c->add_option("--out", cr.out, "Output directory")->required();
  c->add_option("--config", cr.config, "key=value config file");
  c->add_option("--seeds", cr.seeds, "Comma-separated seeds");
  c->add_option("--labeled-subjects", cr.labeled, "Labeled target subjects per seed");
  c->add_option("--epochs", cr.epochs, "Training epochs");
  c->add_option("--source-scheme", cr.source_scheme, "predefined | equal-split-devel");
  c->add_option("--target-scheme", cr.target_scheme, "predefined | equal-split-devel");

  ProjectArgs pr;
  auto* p = app.add_subcommand("project-features", "PCA of last-pool features");
  p->add_option("--model", pr.model, "Checkpoint")->required();
  p->add_option("--data", pr.data, "Manifest (repeatable)")->required();
  p->add_option("--out", pr.out, "Output directory")->required();
  p->add_option("--components", pr.components, "Principal components")->capture_default_str();

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Summaries and SVG plots of logs and reports");
  r->add_option("--log", rp.logs, "Training log (repeatable)");
  r->add_option("--report", rp.reports, "report.json (repeatable)");
  r->add_option("--out", rp.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "dtn: usage error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (c->parsed()) return cmd_cross_test(cr, out);
    if (p->parsed()) return cmd_project(pr, out);
    if (r->parsed()) return cmd_report(rp, out);
  } catch (const ValidationError& ex) {
    err << "dtn: error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const ProtocolError& ex) {
    err << "dtn: error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& ex) {
    err << "dtn: error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& ex) {
    err << "dtn: error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dtn
