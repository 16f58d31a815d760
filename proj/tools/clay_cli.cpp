/*
 * Copyright 2026 The clay Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "clay/error.hpp"
#include "clay/heuristic/labeler.hpp"
#include "clay/pipeline/dataset.hpp"
#include "clay/pipeline/gradient_suite.hpp"
#include "clay/pipeline/overlay.hpp"
#include "clay/pipeline/pipeline.hpp"
#include "clay/pipeline/synth.hpp"
#include "clay/pipeline/training.hpp"

namespace fs = std::filesystem;
using namespace clay;
using namespace clay::pipeline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

Split parse_subset(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw ContractViolation("unknown subset '" + s + "' (train, validation, test)");
}

// Screens of `corpus`, restricted to one subset of `split_file` when given.
struct CorpusSelection {
  std::string corpus;
  std::string split_file;
  std::string subset;

  void add_options(CLI::App* app, const std::string& default_subset) {
    subset = default_subset;
    app->add_option("--corpus", corpus, "Directory of <id>.json + <id>.png pairs")->required()->check(CLI::ExistingDirectory);
    app->add_option("--split", split_file, "Split file written by `split`")->check(CLI::ExistingFile);
    app->add_option("--subset", subset, "Subset of the split to use")
        ->check(CLI::IsMember({"train", "validation", "test"}));
  }

  std::vector<Screen> load() const {
    const auto store = ingest(corpus);
    print_warnings(store.warnings);
    std::vector<std::string> ids;
    if (!split_file.empty()) {
      const auto sp = DatasetSplit::from_json(read_json(split_file));
      ids = sp[parse_subset(subset)];
      if (ids.empty()) throw DataError("subset '" + subset + "' of " + split_file + " is empty");
    }
    auto screens = load_screens(store.screens, ids);
    if (screens.empty()) throw DataError("no admissible screens in " + corpus);
    return screens;
  }
};

struct TrainFlags {
  nn::TrainConfig config;
  int log_every = 100;
  CLI::Option* drop = nullptr;
  CLI::Option* reduced = nullptr;

  void add_options(CLI::App* app, long steps, long batch, double lr) {
    config.total_steps = steps;
    config.batch_size = batch;
    config.initial_lr = lr;
    config.reduced_lr = lr / 4;
    config.lr_drop_step = steps * 2 / 3;
    config.l2_coefficient = 1e-6;
    app->add_option("--steps", config.total_steps, "Optimizer steps")->capture_default_str();
    app->add_option("--batch", config.batch_size, "Batch size")->capture_default_str();
    app->add_option("--lr", config.initial_lr, "Initial learning rate")->capture_default_str();
    reduced = app->add_option("--reduced-lr", config.reduced_lr, "Learning rate after the drop (default lr/4)");
    drop = app->add_option("--lr-drop", config.lr_drop_step, "Step of the learning-rate drop (default 2/3 of steps)");
    app->add_option("--l2", config.l2_coefficient, "L2 coefficient")->capture_default_str();
    app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    app->add_option("--log-every", log_every, "Loss print interval")->capture_default_str();
  }

  // Derived defaults follow the parsed --steps and --lr.
  nn::TrainConfig resolved() const {
    nn::TrainConfig c = config;
    if (drop->count() == 0) c.lr_drop_step = c.total_steps * 2 / 3;
    if (reduced->count() == 0) c.reduced_lr = c.initial_lr / 4;
    c.validate();
    return c;
  }

  nn::TrainHooks hooks(const fs::path& out) const {
    nn::TrainHooks h;
    const int every = log_every;
    h.on_step = [every](long step, double loss) {
      if (every > 0 && step % every == 0) std::cout << "step " << step << " loss " << loss << std::endl;
    };
    h.checkpoint = out.string() + ".diverged";
    return h;
  }
};

// Pipeline settings from an optional config file plus flag overrides.
struct PipelineFlags {
  std::string config_file;
  std::string rules;
  std::string detector;
  std::string model;
  std::string gnn;
  std::string transformer;
  double threshold = -1;

  void add_options(CLI::App* app) {
    app->add_option("--config", config_file, "Pipeline config JSON")->check(CLI::ExistingFile);
    app->add_option("--rules", rules, "Heuristic rule table")->check(CLI::ExistingFile);
    app->add_option("--detector", detector, "Invalid-detector checkpoint");
    app->add_option("--model", model, "Type model")->check(CLI::IsMember({"heuristic", "gnn", "transformer"}));
    app->add_option("--gnn", gnn, "GNN checkpoint");
    app->add_option("--transformer", transformer, "Transformer checkpoint");
    app->add_option("--threshold", threshold, "Detector threshold in (0, 1)");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config_file.empty() ? PipelineConfig{} : PipelineConfig::load(config_file);
    if (!rules.empty()) c.rules = rules;
    if (!detector.empty()) c.detector_checkpoint = detector;
    if (!model.empty()) c.type_model = *parse_type_model(model);
    if (!gnn.empty()) c.gnn_checkpoint = gnn;
    if (!transformer.empty()) c.transformer_checkpoint = transformer;
    if (threshold >= 0) c.detector_threshold = threshold;
    return c;
  }
};

heuristic::RuleTable rules_from(const std::string& path) {
  return path.empty() ? heuristic::RuleTable::defaults() : heuristic::RuleTable::load(path);
}

// Single file or every screen of a directory.
std::vector<Screen> load_inputs(const fs::path& input, const std::string& image) {
  if (fs::is_directory(input)) {
    const auto store = ingest(input);
    print_warnings(store.warnings);
    return load_screens(store.screens);
  }
  return {load_screen(input, image)};
}

fs::path output_for(const fs::path& out, const Screen& s, bool many, const std::string& ext) {
  return many ? out / (s.source_id + ext) : out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clay: view-hierarchy cleaning and object typing"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a corpus directory and write its manifest");
  std::string ingest_dir, ingest_out;
  ingest_cmd->add_option("corpus", ingest_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--out", ingest_out, "Manifest JSON path");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Node counts and class histogram of a corpus");
  std::string stats_dir;
  bool stats_json = false;
  int stats_top = 20;
  stats_cmd->add_option("corpus", stats_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  stats_cmd->add_flag("--json", stats_json, "Print JSON");
  stats_cmd->add_option("--top", stats_top, "Histogram rows to print")->capture_default_str();

  // split
  auto* split_cmd = app.add_subcommand("split", "Package-wise train/validation/test split");
  std::string split_dir, split_out;
  std::vector<double> split_ratios = {0.75, 0.10, 0.15};
  std::uint64_t split_seed = 0;
  split_cmd->add_option("corpus", split_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  split_cmd->add_option("--ratios", split_ratios, "Train, validation, test ratios")->expected(3)->delimiter(',');
  split_cmd->add_option("--seed", split_seed, "Hash seed")->capture_default_str();
  split_cmd->add_option("--out", split_out, "Split JSON path")->required();

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "Apply the cleaning rules");
  std::string pre_input, pre_image, pre_rules, pre_out;
  pre_cmd->add_option("input", pre_input, "Hierarchy JSON or corpus directory")->required()->check(CLI::ExistingPath);
  pre_cmd->add_option("--image", pre_image, "Screenshot (single input only)")->check(CLI::ExistingFile);
  pre_cmd->add_option("--rules", pre_rules, "Heuristic rule table")->check(CLI::ExistingFile);
  pre_cmd->add_option("--out", pre_out, "Output file, or directory for a corpus")->required();

  // train-detector
  auto* td_cmd = app.add_subcommand("train-detector", "Train the invalid-object detector");
  CorpusSelection td_data;
  TrainFlags td_train;
  std::string td_out, td_rules;
  detector::DetectorConfig td_cfg;
  double td_ratio = 4.0;
  td_data.add_options(td_cmd, "train");
  td_train.add_options(td_cmd, 3000, 32, 2e-3);
  td_cmd->add_option("--out", td_out, "Checkpoint path")->required();
  td_cmd->add_option("--rules", td_rules, "Heuristic rule table")->check(CLI::ExistingFile);
  td_cmd->add_option("--height", td_cfg.height, "Input height")->capture_default_str();
  td_cmd->add_option("--width", td_cfg.width, "Input width")->capture_default_str();
  td_cmd->add_option("--resample-ratio", td_ratio, "valid:invalid ratio, 0 disables")->capture_default_str();

  // train-typer
  auto* tt_cmd = app.add_subcommand("train-typer", "Train a type model");
  CorpusSelection tt_data;
  TrainFlags tt_train;
  std::string tt_model, tt_out, tt_rules;
  int tt_vocab = 2000, tt_crop = 64;
  tt_data.add_options(tt_cmd, "train");
  tt_train.add_options(tt_cmd, 1000, 4, 2e-3);
  tt_cmd->add_option("--model", tt_model, "Type model")->required()->check(CLI::IsMember({"gnn", "transformer"}));
  tt_cmd->add_option("--out", tt_out, "Checkpoint path")->required();
  tt_cmd->add_option("--rules", tt_rules, "Heuristic rule table")->check(CLI::ExistingFile);
  tt_cmd->add_option("--vocab", tt_vocab, "Tokenizer vocabulary size")->capture_default_str();
  tt_cmd->add_option("--crop", tt_crop, "Node crop side (gnn)")->capture_default_str();

  // evaluate
  auto* ev_cmd = app.add_subcommand("evaluate", "Score a pipeline on labeled screens");
  CorpusSelection ev_data;
  PipelineFlags ev_flags;
  std::string ev_out;
  ev_data.add_options(ev_cmd, "test");
  ev_flags.add_options(ev_cmd);
  ev_cmd->add_option("--out", ev_out, "Report directory")->required();

  // clean
  auto* clean_cmd = app.add_subcommand("clean", "Run the full cleaning pipeline");
  PipelineFlags clean_flags;
  std::string clean_input, clean_image, clean_out;
  clean_cmd->add_option("input", clean_input, "Hierarchy JSON or corpus directory")->required()->check(CLI::ExistingPath);
  clean_cmd->add_option("--image", clean_image, "Screenshot (single input only)")->check(CLI::ExistingFile);
  clean_cmd->add_option("--out", clean_out, "Output file, or directory for a corpus")->required();
  clean_flags.add_options(clean_cmd);

  // render-overlay
  auto* ov_cmd = app.add_subcommand("render-overlay", "Draw typed boxes over the screenshot");
  PipelineFlags ov_flags;
  std::string ov_input, ov_image, ov_out;
  OverlayOptions ov_opts;
  ov_cmd->add_option("input", ov_input, "Hierarchy JSON or corpus directory")->required()->check(CLI::ExistingPath);
  ov_cmd->add_option("--image", ov_image, "Screenshot (single input only)")->check(CLI::ExistingFile);
  ov_cmd->add_option("--out", ov_out, "PNG path, or directory for a corpus")->required();
  ov_cmd->add_flag("--dashed", ov_opts.draw_removed, "Draw removed nodes dashed");
  ov_cmd->add_option("--thickness", ov_opts.thickness, "Outline width in pixels")->capture_default_str();
  ov_flags.add_options(ov_cmd);

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every trainable module");
  std::uint64_t gc_seed = 0;
  double gc_tolerance = 1e-4;
  gc_cmd->add_option("--seed", gc_seed, "Seed for shapes and inputs")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc_tolerance, "Maximum relative error")->capture_default_str();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled corpus");
  int synth_count = 100;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth::SynthOptions synth_opts;
  synth_cmd->add_option("--count", synth_count, "Screens")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--packages", synth_opts.packages, "Distinct packages")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) {
      const auto store = ingest(ingest_dir);
      print_warnings(store.warnings);
      std::cout << store.stats.to_text(0);
      if (!ingest_out.empty()) {
        nlohmann::json m;
        m["screens"] = nlohmann::json::array();
        for (const auto& s : store.screens)
          m["screens"].push_back({{"source_id", s.source_id},
                                  {"hierarchy", s.hierarchy_path.string()},
                                  {"image", s.image_path.string()},
                                  {"package", s.hierarchy.package_name}});
        m["warnings"] = store.warnings;
        m["stats"] = store.stats.to_json();
        write_json(ingest_out, m);
      }
    } else if (*stats_cmd) {
      const auto store = ingest(stats_dir);
      print_warnings(store.warnings);
      if (stats_json) std::cout << store.stats.to_json().dump(2) << '\n';
      else std::cout << store.stats.to_text(stats_top);
    } else if (*split_cmd) {
      const auto store = ingest(split_dir);
      print_warnings(store.warnings);
      const auto sp = split(store.screens, {split_ratios[0], split_ratios[1], split_ratios[2]}, split_seed);
      print_warnings(sp.warnings);
      write_json(split_out, sp.to_json());
      std::cout << "train " << sp[Split::train].size() << " validation " << sp[Split::validation].size() << " test "
                << sp[Split::test].size() << '\n';
    } else if (*pre_cmd) {
      const auto rules = rules_from(pre_rules);
      const auto screens = load_inputs(pre_input, pre_image);
      const bool many = fs::is_directory(pre_input);
      for (const auto& s : screens) {
        const auto r = preprocess::preprocess(s, rules);
        nlohmann::json j = serialize_hierarchy(r.cleaned);
        j["source_id"] = s.source_id;
        j["preprocess"] = r.report.to_json();
        write_json(output_for(pre_out, s, many, ".json"), j);
        std::cout << s.source_id << ": kept " << r.report.kept.size() << " removed " << r.report.removed.size()
                  << " trimmed " << r.report.trimmed.size() << '\n';
      }
    } else if (*td_cmd) {
      const auto rules = rules_from(td_rules);
      const auto screens = td_data.load();
      td_cfg.validate();
      detector::DetectorDataset data(td_cfg.height, td_cfg.width);
      for (const auto& s : screens) add_detector_examples(data, cleaned_copy(s, rules));
      std::size_t positives = 0;
      for (bool b : data.labels()) positives += b;
      std::cout << "examples " << data.samples.size() << " invalid " << positives << '\n';
      if (positives == 0 || positives == data.samples.size())
        throw DataError("detector training needs both valid and invalid examples");
      const auto train_cfg = td_train.resolved();
      detector::DetectorModel model(td_cfg, train_cfg.seed);
      detector::DetectorTrainOptions o;
      o.resample_ratio = td_ratio;
      o.hooks = td_train.hooks(td_out);
      detector::train_detector(model, data, train_cfg, o);
      model.save(td_out);
      std::cout << "saved " << td_out << '\n';
    } else if (*tt_cmd) {
      const auto train_cfg = tt_train.resolved();
      const auto rules = rules_from(tt_rules);
      const auto raw = tt_data.load();
      std::vector<Screen> screens;
      for (const auto& s : raw) screens.push_back(drop_gold_invalid(cleaned_copy(s, rules)));
      const auto tok = train_tokenizer(screens, tt_vocab);
      std::cout << "screens " << screens.size() << " vocab " << tok.vocab_size() << '\n';
      if (tt_model == "gnn") {
        gnn::GnnConfig cfg;
        cfg.features.crop_size = tt_crop;
        cfg.features.vocab_size = tok.vocab_size();
        gnn::GnnModel model(cfg, tok, train_cfg.seed);
        std::vector<gnn::GraphInput> inputs;
        for (const auto& s : screens) inputs.push_back(gnn::make_graph_input(s, tok, cfg));
        gnn::train_gnn(model, inputs, train_cfg, tt_train.hooks(tt_out));
        model.save(tt_out);
      } else {
        transformer::TransformerConfig cfg;
        cfg.features.vocab_size = tok.vocab_size();
        transformer::TransformerModel model(cfg, tok, train_cfg.seed);
        std::vector<transformer::ScreenInput> inputs;
        for (const auto& s : screens) inputs.push_back(transformer::make_screen_input(s, tok, cfg));
        transformer::train_transformer(model, inputs, train_cfg, tt_train.hooks(tt_out));
        model.save(tt_out);
      }
      std::cout << "saved " << tt_out << '\n';
    } else if (*ev_cmd) {
      const Pipeline p(ev_flags.resolve());
      const auto screens = ev_data.load();
      const auto e = evaluate_pipeline(p, screens);
      const fs::path out = ev_out;
      nlohmann::json j = e.to_json();
      j["config"] = p.config().to_json();
      j["screens"] = screens.size();
      write_json(out / "report.json", j);
      if (e.typed > 0) {
        write_text(out / "types.txt", e.types.to_table(std::string(to_string(p.config().type_model))));
        write_text(out / "confusion.csv", e.types.confusion_csv());
        std::cout << e.types.to_table(std::string(to_string(p.config().type_model)));
      }
      std::cout << "invalid f1 " << e.invalid.f1 << " type accuracy " << e.type_accuracy << '\n';
    } else if (*clean_cmd) {
      const Pipeline p(clean_flags.resolve());
      const auto screens = load_inputs(clean_input, clean_image);
      const bool many = fs::is_directory(clean_input);
      for (const auto& s : screens) {
        const auto c = p.clean(s);
        write_json(output_for(clean_out, s, many, ".json"), c.to_json());
        std::cout << s.source_id << ": " << c.nodes.size() << " nodes kept, " << c.report.removed.size()
                  << " rule-removed, " << c.model_removed.size() << " model-removed\n";
      }
    } else if (*ov_cmd) {
      const Pipeline p(ov_flags.resolve());
      const auto screens = load_inputs(ov_input, ov_image);
      const bool many = fs::is_directory(ov_input);
      for (const auto& s : screens) {
        const auto path = output_for(ov_out, s, many, ".png");
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_png(path, render_overlay(s, p.clean(s), ov_opts));
      }
    } else if (*gc_cmd) {
      bool ok = true;
      for (const auto& c : run_gradient_suite(gc_seed)) {
        const bool pass = c.result.max_rel_error < gc_tolerance;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << c.name << " max_rel_error=" << c.result.max_rel_error
                  << " entries=" << c.result.entries_checked << " kinks=" << c.result.kinks << " worst=" << c.result.worst_param
                  << '\n';
      }
      return ok ? kExitOk : kExitData;
    } else if (*synth_cmd) {
      const auto screens = synth::generate_corpus(synth_count, synth_seed, synth_opts);
      synth::write_corpus(synth_out, screens);
      std::cout << "wrote " << screens.size() << " screens to " << synth_out << '\n';
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
