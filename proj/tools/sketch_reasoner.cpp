// sketch-reasoner: command-line front end for the sketch reasoning runtime.

#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "sketcher/config.hpp"
#include "sketcher/dataset.hpp"
#include "sketcher/dsl.hpp"
#include "sketcher/eval.hpp"
#include "sketcher/image.hpp"
#include "sketcher/mcts.hpp"
#include "sketcher/model.hpp"
#include "sketcher/pipeline.hpp"
#include "sketcher/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sketcher;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string endpoint;
  std::string model_name;
  double temperature = -1;  // <0 means "not set on the command line"
  int timeout = -1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string scripted_path;  // scripted-model fixture file
  bool lenient = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

KvConfig load_config(const GlobalOptions& opts) {
  if (opts.config_path.empty()) return {};
  return KvConfig::parse_file(opts.config_path);
}

PipelineConfig pipeline_config(const KvConfig& config, const GlobalOptions& opts) {
  PipelineConfig pc;
  pc.max_turns = config.get_int("pipeline.max_turns", pc.max_turns);
  pc.temperature = config.get_double("pipeline.temperature", pc.temperature);
  pc.strict_coords = config.get_bool("pipeline.strict_coords", pc.strict_coords);
  pc.system_prompt = config.get_or("pipeline.system_prompt", pc.system_prompt);
  pc.render.stroke_width_px = config.get_int("render.stroke_width_px", pc.render.stroke_width_px);
  pc.render.point_radius_px = config.get_int("render.point_radius_px", pc.render.point_radius_px);
  pc.render.arrowhead_len_px = config.get_int("render.arrowhead_len_px", pc.render.arrowhead_len_px);
  pc.render.arrowhead_angle = config.get_double("render.arrowhead_angle", pc.render.arrowhead_angle);
  if (opts.lenient) pc.strict_coords = false;
  if (opts.temperature >= 0) pc.temperature = opts.temperature;
  pc.render.strict_coords = pc.strict_coords;
  return pc;
}

SearchConfig search_config(const KvConfig& config) {
  SearchConfig sc;
  std::string profile = config.get_or("search.profile", "default");
  if (auto preset = SearchConfig::profile(profile)) {
    sc = *preset;
  } else {
    throw std::runtime_error("unknown search profile: " + profile);
  }
  sc.sim_limit = config.get_int("search.sim_limit", sc.sim_limit);
  sc.success_limit = config.get_int("search.success_limit", sc.success_limit);
  sc.max_depth = config.get_int("search.max_depth", sc.max_depth);
  sc.expansion_samples = config.get_int("search.expansion_samples", sc.expansion_samples);
  sc.max_children = config.get_int("search.max_children", sc.max_children);
  sc.t_high = config.get_double("search.t_high", sc.t_high);
  sc.t_low = config.get_double("search.t_low", sc.t_low);
  sc.c_puct = config.get_double("search.c_puct", sc.c_puct);
  sc.lambda_len = config.get_double("search.lambda_len", sc.lambda_len);
  sc.epsilon = config.get_double("search.epsilon", sc.epsilon);
  return sc;
}

// Scripted fixture file: a JSON array of
//   {"band": "low"|"high", "transcript": [{"role": ..., "text": ...,
//    "image": bool}...], "replies": [...]}.
std::unique_ptr<ScriptedModel> load_scripted_model(const std::string& path) {
  json doc = json::parse(read_file(path));
  auto model = std::make_unique<ScriptedModel>();
  for (const auto& entry : doc) {
    std::vector<Message> transcript;
    for (const auto& turn : entry.at("transcript")) {
      Message m;
      m.role = role_from_string(turn.value("role", "user")).value_or(Role::User);
      m.parts.push_back(TextPart{turn.value("text", "")});
      if (turn.value("image", false)) m.parts.push_back(ImagePart{});
      transcript.push_back(std::move(m));
    }
    std::vector<std::string> replies;
    for (const auto& r : entry.at("replies")) replies.push_back(r.get<std::string>());
    model->add_response_for_band(transcript, entry.value("band", "low"), std::move(replies));
  }
  return model;
}

std::unique_ptr<ModelClient> make_model(const KvConfig& config,
                                        const GlobalOptions& opts) {
  if (!opts.scripted_path.empty()) return load_scripted_model(opts.scripted_path);
  ModelConfig mc;
  mc.endpoint_url = !opts.endpoint.empty() ? opts.endpoint : config.get_or("model.endpoint", "");
  mc.model_name = !opts.model_name.empty() ? opts.model_name : config.get_or("model.name", "");
  mc.api_key_env = config.get_or("model.api_key_env", mc.api_key_env);
  mc.max_tokens = config.get_int("model.max_tokens", mc.max_tokens);
  mc.timeout_seconds = opts.timeout > 0 ? opts.timeout
                                        : config.get_int("model.timeout", mc.timeout_seconds);
  mc.retry_count = config.get_int("model.retry_count", mc.retry_count);
  if (mc.endpoint_url.empty()) {
    throw std::runtime_error(
        "no model endpoint configured (use --endpoint, model.endpoint, or --scripted)");
  }
  return std::make_unique<HttpModelClient>(mc);
}

std::unique_ptr<Judge> make_judge(const KvConfig& config, const GlobalOptions& opts,
                                  std::shared_ptr<ModelClient>& judge_model) {
  std::string kind = config.get_or("judge.kind", "exact");
  if (kind == "exact") return std::make_unique<ExactMatchJudge>();
  if (kind == "model") {
    judge_model = std::shared_ptr<ModelClient>(make_model(config, opts));
    return std::make_unique<ModelJudge>(judge_model);
  }
  throw std::runtime_error("unknown judge kind: " + kind);
}

std::shared_ptr<const Image> load_base_image(const std::string& image_path,
                                             const std::string& blank_spec) {
  if (!image_path.empty()) {
    return std::make_shared<Image>(load_png(image_path));
  }
  if (!blank_spec.empty()) {
    auto x = blank_spec.find('x');
    if (x == std::string::npos) {
      throw std::runtime_error("--blank expects WIDTHxHEIGHT, e.g. 800x600");
    }
    int w = std::stoi(blank_spec.substr(0, x));
    int h = std::stoi(blank_spec.substr(x + 1));
    return std::make_shared<Image>(Image(w, h));
  }
  throw std::runtime_error("provide --image or --blank");
}

void persist_record_bitmaps(CoTRecord& record, const std::string& dir) {
  fs::create_directories(dir);
  int index = 0;
  for (Message& m : record.turns) {
    for (MessagePart& part : m.parts) {
      if (auto* img = std::get_if<ImagePart>(&part)) {
        ++index;
        img->path = dir + "/turn_" + std::to_string(index) + ".png";
        std::ofstream out(img->path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(img->png.data()),
                  static_cast<std::streamsize>(img->png.size()));
      }
    }
  }
}

int cmd_parse(const GlobalOptions& opts, const std::string& file) {
  ParseOptions parse_opts{!opts.lenient};
  ExtractResult result = parse_source(read_file(file), parse_opts);
  if (!result.ok()) {
    for (const ParseDiagnostic& d : result.diagnostics) {
      std::cerr << file << ": " << format_diagnostic(d) << '\n';
    }
    return 1;
  }
  if (result.scripts.empty()) {
    std::cerr << file << ": no drawing commands\n";
    return 1;
  }
  std::cout << canonical_code(result.scripts) << '\n';
  return 0;
}

int cmd_render(const GlobalOptions& opts, const KvConfig& config,
               const std::string& script_file, const std::string& image_path,
               const std::string& blank_spec, const std::string& out_path) {
  PipelineConfig pc = pipeline_config(config, opts);
  ParseOptions parse_opts{pc.strict_coords};
  ExtractResult result = parse_source(read_file(script_file), parse_opts);
  if (!result.ok()) {
    for (const ParseDiagnostic& d : result.diagnostics) {
      std::cerr << script_file << ": " << format_diagnostic(d) << '\n';
    }
    return 1;
  }
  Canvas canvas(load_base_image(image_path, blank_spec));
  TurnOutcome outcome = apply_turn(canvas, result.scripts);
  if (!outcome.ok()) {
    std::cerr << "render error: " << outcome.error->message << '\n';
    return 1;
  }
  save_png(rasterize(outcome.canvas, pc.render), out_path);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

int cmd_run(const GlobalOptions& opts, const KvConfig& config,
            const std::string& question, const std::string& image_path,
            const std::string& blank_spec) {
  PipelineConfig pc = pipeline_config(config, opts);
  auto model = make_model(config, opts);
  auto base = load_base_image(image_path, blank_spec);
  fs::create_directories(opts.out_dir);
  Session session = run_session(question, base, *model, pc, opts.out_dir);
  write_session(session, opts.out_dir + "/session.json");
  std::cout << "status: " << to_string(session.status) << '\n';
  std::cout << "assistant turns: " << session.assistant_turns << '\n';
  if (session.final_answer) std::cout << "final answer: " << *session.final_answer << '\n';
  std::cout << "wrote " << opts.out_dir << "/session.json\n";
  return session.status == SessionStatus::RenderFailed ? 1 : 0;
}

int run_one_search(const QaItem& item, ModelClient& model, Judge& judge,
                   const SearchConfig& sc, const PipelineConfig& pc,
                   std::shared_ptr<const Image> base, const std::string& out_dir,
                   bool append_samples, const std::string& samples_path) {
  SearchRequest request;
  request.question = item.question;
  request.gold = item.gold;
  request.base_image = std::move(base);
  request.base_image_path = item.image_path;
  request.artifact_dir = out_dir;
  fs::create_directories(out_dir);

  SearchResult result = search(request, model, judge, sc, pc);
  {
    std::ofstream out(out_dir + "/tree.json", std::ios::trunc);
    out << tree_to_json(*result.tree, result.stats, result.best) << '\n';
  }
  ExtractOutcome samples = extract_samples(*result.tree, sc);
  write_samples_jsonl(samples.samples, samples_path, append_samples);
  {
    int positives = 0;
    for (const PreferenceSample& s : samples.samples) {
      positives += s.label == SampleLabel::Positive ? 1 : 0;
    }
    json meta;
    meta["item"] = item.id;
    meta["found_correct_terminal"] = samples.found_correct_terminal;
    meta["best_path_ids"] = samples.best_path_ids;
    meta["positives"] = positives;
    meta["negatives"] = static_cast<int>(samples.samples.size()) - positives;
    std::ofstream out(out_dir + "/extract.json", std::ios::trunc);
    out << meta.dump(2) << '\n';
  }

  std::cout << item.id << ": iterations=" << result.stats.iterations
            << " successes=" << result.stats.successes
            << " nodes=" << result.tree->nodes().size()
            << " samples=" << samples.samples.size();
  if (result.stats.no_viable_child) std::cout << " [no-viable-child]";
  if (!samples.found_correct_terminal) std::cout << " [no-correct-terminal]";
  std::cout << '\n';
  return 0;
}

int cmd_search(const GlobalOptions& opts, const KvConfig& config,
               const std::string& question, const std::string& gold,
               const std::string& image_path, const std::string& blank_spec) {
  PipelineConfig pc = pipeline_config(config, opts);
  SearchConfig sc = search_config(config);
  auto model = make_model(config, opts);
  std::shared_ptr<ModelClient> judge_model;
  auto judge = make_judge(config, opts, judge_model);
  QaItem item{"query", question, gold, image_path, ""};
  return run_one_search(item, *model, *judge, sc, pc,
                        load_base_image(image_path, blank_spec), opts.out_dir,
                        false, opts.out_dir + "/samples.jsonl");
}

int cmd_mine(const GlobalOptions& opts, const KvConfig& config,
             const std::string& dataset_path) {
  PipelineConfig pc = pipeline_config(config, opts);
  SearchConfig sc = search_config(config);
  auto model = make_model(config, opts);
  std::shared_ptr<ModelClient> judge_model;
  auto judge = make_judge(config, opts, judge_model);
  std::vector<QaItem> dataset = read_qa_dataset(dataset_path);
  fs::create_directories(opts.out_dir);
  std::string samples_path = opts.out_dir + "/samples.jsonl";
  std::ofstream(samples_path, std::ios::trunc);  // start fresh, then append
  int failures = 0;
  for (const QaItem& item : dataset) {
    try {
      auto base = item.image_path.empty()
                      ? std::make_shared<const Image>(Image(800, 600))
                      : std::make_shared<const Image>(load_png(item.image_path));
      run_one_search(item, *model, *judge, sc, pc, base,
                     opts.out_dir + "/" + item.id, true, samples_path);
    } catch (const std::exception& ex) {
      std::cerr << item.id << ": " << ex.what() << '\n';
      ++failures;
    }
  }
  std::cout << "wrote " << samples_path << '\n';
  return failures == 0 ? 0 : 1;
}

int cmd_segment(const GlobalOptions& opts, const KvConfig& config,
                const std::string& input_path) {
  PipelineConfig pc = pipeline_config(config, opts);
  std::vector<ReasoningInput> inputs = read_reasoning_inputs(input_path);
  std::vector<CoTRecord> records;
  int rejected = 0;
  fs::create_directories(opts.out_dir);
  for (const ReasoningInput& input : inputs) {
    std::shared_ptr<const Image> base;
    if (!input.image_path.empty()) {
      base = std::make_shared<Image>(load_png(input.image_path));
    } else {
      base = std::make_shared<Image>(Image(800, 600));
    }
    SegmentResult result = segment(input.id, input.question, base, input.reasoning, pc);
    if (!result.ok()) {
      std::cerr << input.id << ": rejected: " << result.error->detail << '\n';
      ++rejected;
      continue;
    }
    result.record->image_path = input.image_path;
    persist_record_bitmaps(*result.record, opts.out_dir + "/" + input.id);
    records.push_back(std::move(*result.record));
  }
  write_records_jsonl(records, opts.out_dir + "/records.jsonl");
  std::cout << "segmented " << records.size() << " records (" << rejected
            << " rejected) -> " << opts.out_dir << "/records.jsonl\n";
  return 0;
}

int cmd_reflect(const GlobalOptions& opts, const KvConfig& config,
                const std::string& input_path, int parallel) {
  PipelineConfig pc = pipeline_config(config, opts);
  auto model = make_model(config, opts);
  double temperature = config.get_double("synthesis.temperature", 0.7);
  std::vector<CoTRecord> records = read_records_jsonl(input_path);
  fs::create_directories(opts.out_dir);

  // Records are independent; run a bounded number of model calls in flight.
  std::vector<std::optional<CoTRecord>> results(records.size());
  std::vector<std::string> errors(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      CoTRecord& record = records[i];
      try {
        if (!record.base_image && !record.image_path.empty()) {
          record.base_image = std::make_shared<Image>(load_png(record.image_path));
        }
        if (!record.base_image) {
          record.base_image = std::make_shared<Image>(Image(800, 600));
        }
        InjectResult result = inject_reflection(record, *model, temperature, pc);
        if (result.ok()) {
          results[i] = std::move(result.record);
        } else {
          errors[i] = result.error;
        }
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
  };
  int threads = std::max(1, parallel);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<CoTRecord> reflective;
  int failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (results[i]) {
      persist_record_bitmaps(*results[i], opts.out_dir + "/" + results[i]->chain_id);
      reflective.push_back(std::move(*results[i]));
    } else {
      std::cerr << records[i].chain_id << ": " << errors[i] << '\n';
      ++failures;
    }
  }
  write_records_jsonl(reflective, opts.out_dir + "/records.jsonl");
  std::cout << "reflected " << reflective.size() << " records (" << failures
            << " failed) -> " << opts.out_dir << "/records.jsonl\n";
  return 0;
}

int cmd_mixdata(const GlobalOptions& opts, const std::string& reflective_path,
                const std::string& plain_path, double fraction,
                const std::string& out_path) {
  MixConfig mc{fraction, opts.seed};
  MixResult result = mix(read_records_jsonl(reflective_path),
                         read_records_jsonl(plain_path), mc);
  if (!result.ok()) {
    std::cerr << result.error << '\n';
    return 1;
  }
  write_records_jsonl(result.records, out_path);
  int reflective_count = 0;
  for (const CoTRecord& r : result.records) reflective_count += r.reflective ? 1 : 0;
  std::cout << "mixed " << result.records.size() << " records (" << reflective_count
            << " reflective) -> " << out_path << '\n';
  return 0;
}

int cmd_eval(const GlobalOptions& opts, const KvConfig& config,
             const std::string& dataset_path, int parallel) {
  PipelineConfig pc = pipeline_config(config, opts);
  auto model = make_model(config, opts);
  std::shared_ptr<ModelClient> judge_model;
  auto judge = make_judge(config, opts, judge_model);
  EvalOptions eo;
  eo.votes = config.get_int("eval.votes", eo.votes);
  eo.threshold = config.get_int("eval.threshold", eo.threshold);
  eo.parallel = parallel;

  std::vector<QaItem> dataset = read_qa_dataset(dataset_path);
  fs::create_directories(opts.out_dir);
  EvalReport report = evaluate(dataset, *model, *judge, pc, eo, opts.out_dir);
  {
    std::ofstream out(opts.out_dir + "/report.json", std::ios::trunc);
    out << report_to_json(report) << '\n';
  }
  {
    std::ofstream out(opts.out_dir + "/report.csv", std::ios::trunc);
    out << report_to_csv(report);
  }
  std::cout << "accuracy: " << report.accuracy << " (" << report.correct << "/"
            << report.judged << ")\n";
  std::cout << "mean turns: " << report.mean_turns << '\n';
  std::cout << "wrote " << opts.out_dir << "/report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch-reasoner: drawing-language runtime, draw-feedback "
               "sessions, dialogue tree search, and dataset tooling"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "TOML-style key/value config file");
  app.add_option("--endpoint", opts.endpoint, "model endpoint URL");
  app.add_option("--model", opts.model_name, "model name sent in requests");
  app.add_option("--temperature", opts.temperature, "sampling temperature");
  app.add_option("--timeout", opts.timeout, "request timeout in seconds");
  app.add_option("--seed", opts.seed, "seed for deterministic shuffles");
  app.add_option("--out-dir", opts.out_dir, "output directory");
  app.add_option("--scripted", opts.scripted_path,
                 "scripted-model fixture JSON instead of a remote endpoint");
  app.add_flag("--lenient", opts.lenient, "clamp out-of-range coordinates instead of rejecting");

  std::string file, image_path, blank_spec, out_path = "out.png";
  std::string question, gold, dataset_path, input_path;
  std::string reflective_path, plain_path, mix_out = "mixed.jsonl";
  double fraction = 0.5;
  int parallel = 1;

  auto* parse_cmd = app.add_subcommand("parse", "parse a script file and print its canonical form");
  parse_cmd->add_option("file", file, "script or message file")->required();

  auto* render_cmd = app.add_subcommand("render", "rasterize a script onto a base image");
  render_cmd->add_option("file", file, "script file")->required();
  render_cmd->add_option("--image", image_path, "base PNG image");
  render_cmd->add_option("--blank", blank_spec, "blank base instead, WIDTHxHEIGHT");
  render_cmd->add_option("--out", out_path, "output PNG path");

  auto* run_cmd = app.add_subcommand("run", "run one draw-feedback session");
  run_cmd->add_option("--question", question, "question text")->required();
  run_cmd->add_option("--image", image_path, "chart PNG image");
  run_cmd->add_option("--blank", blank_spec, "blank base instead, WIDTHxHEIGHT");

  auto* search_cmd = app.add_subcommand("search", "tree-search one QA item");
  search_cmd->add_option("--question", question, "question text")->required();
  search_cmd->add_option("--gold", gold, "reference answer")->required();
  search_cmd->add_option("--image", image_path, "chart PNG image");
  search_cmd->add_option("--blank", blank_spec, "blank base instead, WIDTHxHEIGHT");

  auto* mine_cmd = app.add_subcommand("mine", "search a dataset and mine preference samples");
  mine_cmd->add_option("--dataset", dataset_path, "QA dataset (.jsonl or directory)")->required();

  auto* segment_cmd = app.add_subcommand("segment", "segment reasoning texts into dialogues");
  segment_cmd->add_option("--input", input_path, "reasoning inputs (.jsonl)")->required();

  auto* reflect_cmd = app.add_subcommand("reflect", "inject reflection into segmented records");
  reflect_cmd->add_option("--input", input_path, "records.jsonl to rewrite")->required();
  reflect_cmd->add_option("--parallel", parallel, "model calls in flight");

  auto* mix_cmd = app.add_subcommand("mixdata", "blend reflective and plain records");
  mix_cmd->add_option("--reflective", reflective_path, "reflective records.jsonl")->required();
  mix_cmd->add_option("--plain", plain_path, "plain records.jsonl")->required();
  mix_cmd->add_option("--fraction", fraction, "reflective fraction of the mix");
  mix_cmd->add_option("--out", mix_out, "output records.jsonl");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model over a QA dataset");
  eval_cmd->add_option("--dataset", dataset_path, "QA dataset (.jsonl or directory)")->required();
  eval_cmd->add_option("--parallel", parallel, "concurrent sessions");

  CLI11_PARSE(app, argc, argv);

  try {
    KvConfig config = load_config(opts);
    if (parse_cmd->parsed()) return cmd_parse(opts, file);
    if (render_cmd->parsed())
      return cmd_render(opts, config, file, image_path, blank_spec, out_path);
    if (run_cmd->parsed()) return cmd_run(opts, config, question, image_path, blank_spec);
    if (search_cmd->parsed())
      return cmd_search(opts, config, question, gold, image_path, blank_spec);
    if (mine_cmd->parsed()) return cmd_mine(opts, config, dataset_path);
    if (segment_cmd->parsed()) return cmd_segment(opts, config, input_path);
    if (reflect_cmd->parsed()) return cmd_reflect(opts, config, input_path, parallel);
    if (mix_cmd->parsed())
      return cmd_mixdata(opts, reflective_path, plain_path, fraction, mix_out);
    if (eval_cmd->parsed()) return cmd_eval(opts, config, dataset_path, parallel);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
