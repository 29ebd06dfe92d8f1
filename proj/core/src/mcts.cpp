#include "sketcher/mcts.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace sketcher {

using json = nlohmann::json;

SearchConfig SearchConfig::paper_training() {
  SearchConfig config;
  config.c_puct = 3.0;
  config.sim_limit = 15;
  return config;
}

std::optional<SearchConfig> SearchConfig::profile(std::string_view name) {
  if (name == "default") return defaults();
  if (name == "paper-training") return paper_training();
  return std::nullopt;
}

void SearchConfig::validate() const {
  if (sim_limit < 1 || success_limit < 1 || max_depth < 1) {
    throw std::invalid_argument("search limits must be >= 1");
  }
  if (max_children < 1 || max_children > expansion_samples) {
    throw std::invalid_argument(
        "max_children must lie in [1, expansion_samples]");
  }
  if (!(epsilon > 0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
}

int SearchNode::non_virtual_child_count() const {
  int count = 0;
  for (const SearchNode* child : children) {
    if (!child->virtual_node) ++count;
  }
  return count;
}

SearchTree::SearchTree(std::string question, std::string gold,
                       std::shared_ptr<const Image> base_image,
                       std::vector<Message> root_messages)
    : question_(std::move(question)),
      gold_(std::move(gold)),
      base_image_(std::move(base_image)),
      root_messages_(std::move(root_messages)) {
  auto root = std::make_unique<SearchNode>();
  root->id = 0;
  root->canvas = Canvas(base_image_);
  nodes_.push_back(std::move(root));
}

SearchNode& SearchTree::add_child(SearchNode& parent) {
  auto node = std::make_unique<SearchNode>();
  node->id = static_cast<int>(nodes_.size());
  node->parent = &parent;
  node->depth = parent.depth + 1;
  node->canvas = parent.canvas;
  SearchNode& ref = *node;
  parent.children.push_back(&ref);
  nodes_.push_back(std::move(node));
  return ref;
}

SearchNode* SearchTree::node_by_id(int id) {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) return nullptr;
  return nodes_[id].get();
}

const SearchNode* SearchTree::node_by_id(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) return nullptr;
  return nodes_[id].get();
}

bool SearchTree::record_duplicate(const SearchNode& parent, std::string text,
                                  std::string code) {
  for (const DuplicateRecord& d : duplicates_) {
    if (d.parent_id == parent.id && d.canonical_code == code) return false;
  }
  duplicates_.push_back({parent.id, std::move(text), std::move(code)});
  return true;
}

std::vector<Message> SearchTree::transcript_for(const SearchNode& node) const {
  std::vector<const SearchNode*> chain;
  for (const SearchNode* cur = &node; cur->parent != nullptr; cur = cur->parent) {
    chain.push_back(cur);
  }
  std::reverse(chain.begin(), chain.end());

  std::vector<Message> messages = root_messages_;
  for (const SearchNode* cur : chain) {
    messages.push_back(Message::text(Role::Assistant, cur->assistant_text));
    if (!cur->terminal && !cur->feedback_png.empty()) {
      messages.push_back(feedback_message(cur->feedback_png, cur->bitmap_path));
    }
  }
  return messages;
}

double ucb(const SearchNode& node, const SearchConfig& config) {
  double n = node.visits + config.epsilon;
  double exploitation = node.q / n;
  double parent_visits = node.parent ? node.parent->visits : 0;
  double exploration = config.c_puct * std::sqrt(std::log(parent_visits + 1.0) / n);
  double over = std::max(0.0, static_cast<double>(node.depth) - 4.0);
  double penalty =
      config.lambda_len * (0.01 * node.depth + 0.3 * (std::exp(0.7 * over) - 1.0));
  return exploitation + exploration - penalty;
}

SearchNode& select(SearchNode& root, const SearchConfig& config) {
  SearchNode* node = &root;
  while (true) {
    if (node->expandable(config)) return *node;
    SearchNode* best = nullptr;
    double best_score = 0;
    for (SearchNode* child : node->children) {
      if (child->virtual_node) continue;
      double score = ucb(*child, config);
      if (!best || score > best_score) {  // ties keep the first-created child
        best = child;
        best_score = score;
      }
    }
    if (!best) return *node;  // leaf, or every child virtual
    node = best;
  }
}

void backprop(SearchNode& node, double reward) {
  for (SearchNode* cur = &node; cur != nullptr; cur = cur->parent) {
    if (cur->virtual_node) continue;
    cur->visits += 1;
    cur->q += reward;
  }
}

namespace {

void persist_bitmap(SearchNode& node, const std::string& artifact_dir) {
  if (artifact_dir.empty() || node.feedback_png.empty()) return;
  std::filesystem::create_directories(artifact_dir);
  node.bitmap_path = artifact_dir + "/node_" + std::to_string(node.id) + ".png";
  std::ofstream out(node.bitmap_path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(node.feedback_png.data()),
            static_cast<std::streamsize>(node.feedback_png.size()));
}

std::string diagnostics_text(const std::vector<ParseDiagnostic>& diags) {
  std::string out;
  for (const ParseDiagnostic& d : diags) {
    if (!out.empty()) out += "; ";
    out += format_diagnostic(d);
  }
  return out;
}

}  // namespace

std::vector<SearchNode*> expand(SearchTree& tree, SearchNode& node,
                                ModelClient& model, Judge& judge,
                                const SearchConfig& config,
                                const PipelineConfig& pipeline,
                                SearchStats& stats) {
  std::vector<SearchNode*> created;
  std::vector<Message> transcript = tree.transcript_for(node);
  std::vector<std::string> replies =
      model.complete(transcript, config.t_high, config.expansion_samples);

  ParseOptions parse_opts{pipeline.strict_coords};
  for (const std::string& text : replies) {
    if (node.non_virtual_child_count() >= config.max_children) {
      node.full = true;
      break;
    }
    ExtractResult extracted = extract_blocks(text, parse_opts);

    if (!extracted.has_code()) {
      // End of solution: judge immediately and backpropagate the reward.
      SearchNode& child = tree.add_child(node);
      child.assistant_text = text;
      child.terminal = true;
      child.reward = judge.verdict(text, tree.gold()) == Vote::Correct ? 1.0 : 0.0;
      if (child.reward >= 1.0) ++stats.successes;
      backprop(child, child.reward);
      ++stats.backprops;
      created.push_back(&child);
      continue;
    }

    std::string code = extracted.ok() ? canonical_code(extracted.scripts) : std::string();
    if (!code.empty()) {
      bool duplicate = false;
      for (const SearchNode* sibling : node.children) {
        if (!sibling->canonical_code.empty() && sibling->canonical_code == code) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        tree.record_duplicate(node, text, code);
        continue;
      }
    }

    if (!extracted.ok()) {
      SearchNode& child = tree.add_child(node);
      child.assistant_text = text;
      child.virtual_node = true;
      child.virtual_reason = VirtualReason::RenderError;
      child.failure_detail = diagnostics_text(extracted.diagnostics);
      created.push_back(&child);
      continue;
    }

    TurnOutcome outcome = apply_turn(node.canvas, extracted.scripts);
    if (!outcome.ok()) {
      SearchNode& child = tree.add_child(node);
      child.assistant_text = text;
      child.canonical_code = code;
      child.virtual_node = true;
      child.virtual_reason = VirtualReason::RenderError;
      child.failure_detail = outcome.error->message;
      created.push_back(&child);
      continue;
    }

    SearchNode& child = tree.add_child(node);
    child.assistant_text = text;
    child.canonical_code = code;
    child.canvas = std::move(outcome.canvas);
    child.feedback_png = encode_png(rasterize(child.canvas, pipeline.render));

    if (signature_subset(child.canvas, node.canvas)) {
      // The drawing added nothing beyond the parent: invalid reflection.
      child.virtual_node = true;
      child.virtual_reason = VirtualReason::InvalidReflection;
      created.push_back(&child);
      continue;
    }
    created.push_back(&child);
    if (node.non_virtual_child_count() >= config.max_children) node.full = true;
  }
  return created;
}

double rollout(SearchTree& tree, SearchNode& node, ModelClient& model,
               Judge& judge, const SearchConfig& config,
               const PipelineConfig& pipeline) {
  if (node.terminal || node.rolled || node.virtual_node) {
    throw std::logic_error("rollout precondition violated");
  }
  std::vector<Message> transcript = tree.transcript_for(node);
  Canvas canvas = node.canvas;
  ParseOptions parse_opts{pipeline.strict_coords};

  double reward = 0.0;
  for (int depth = node.depth + 1; depth <= config.max_depth; ++depth) {
    std::string text = model.complete(transcript, config.t_low, 1).at(0);
    ExtractResult extracted = extract_blocks(text, parse_opts);
    if (!extracted.has_code()) {
      reward = judge.verdict(text, tree.gold()) == Vote::Correct ? 1.0 : 0.0;
      break;
    }
    if (!extracted.ok()) break;  // render failure: reward 0
    TurnOutcome outcome = apply_turn(canvas, extracted.scripts);
    if (!outcome.ok()) break;
    canvas = std::move(outcome.canvas);
    transcript.push_back(Message::text(Role::Assistant, text));
    transcript.push_back(
        feedback_message(encode_png(rasterize(canvas, pipeline.render))));
  }
  // Falling off the loop end means the depth limit was hit: reward stays 0.
  node.reward = reward;
  node.rolled = true;
  return reward;
}

SearchResult search(const SearchRequest& request, ModelClient& model,
                    Judge& judge, const SearchConfig& config,
                    const PipelineConfig& pipeline) {
  config.validate();
  std::vector<Message> root_messages = initial_messages(
      request.question, request.base_image, pipeline.system_prompt);
  if (!request.base_image_path.empty()) {
    for (Message& m : root_messages) {
      for (MessagePart& part : m.parts) {
        if (auto* img = std::get_if<ImagePart>(&part)) img->path = request.base_image_path;
      }
    }
  }
  SearchResult result;
  result.tree = std::make_unique<SearchTree>(request.question, request.gold,
                                             request.base_image,
                                             std::move(root_messages));
  SearchTree& tree = *result.tree;
  SearchStats& stats = result.stats;

  int consecutive_failures = 0;
  int iteration = 0;
  while (iteration < config.sim_limit && stats.successes < config.success_limit) {
    try {
      SearchNode& node = select(tree.root(), config);
      if (node.expandable(config)) {
        std::vector<SearchNode*> created =
            expand(tree, node, model, judge, config, pipeline, stats);
        if (!request.artifact_dir.empty()) {
          for (SearchNode* child : created) persist_bitmap(*child, request.artifact_dir);
        }
      }
      if (!node.terminal && !node.virtual_node && !node.rolled) {
        rollout(tree, node, model, judge, config, pipeline);
      }
      backprop(node, node.reward);
      ++stats.backprops;
      ++iteration;
      consecutive_failures = 0;
    } catch (const ModelError&) {
      // A model failure aborts the iteration, not the search.
      ++stats.model_failures;
      if (++consecutive_failures > config.model_retry_limit) throw;
    }
  }
  stats.iterations = iteration;
  stats.early_stop = stats.successes >= config.success_limit;

  for (SearchNode* child : tree.root().children) {
    if (child->virtual_node) continue;
    if (!result.best ||
        child->mean(config.epsilon) > result.best->mean(config.epsilon)) {
      result.best = child;
    }
  }
  stats.no_viable_child = result.best == nullptr;
  return result;
}

std::string_view to_string(SampleLabel label) {
  return label == SampleLabel::Positive ? "positive" : "negative";
}

std::string_view to_string(SampleReason reason) {
  switch (reason) {
    case SampleReason::BestPath: return "best-path";
    case SampleReason::LowValueSibling: return "low-value-sibling";
    case SampleReason::RenderError: return "render-error";
    case SampleReason::Duplicate: return "duplicate";
  }
  return "best-path";
}

namespace {

std::string origin_path(const SearchNode& node) {
  std::vector<int> ids;
  for (const SearchNode* cur = &node; cur != nullptr; cur = cur->parent) {
    ids.push_back(cur->id);
  }
  std::reverse(ids.begin(), ids.end());
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += '/';
    out += std::to_string(ids[i]);
  }
  return out;
}

// Can a correct terminal be reached through non-virtual nodes from here?
bool correct_reachable(const SearchNode& node) {
  if (node.virtual_node) return false;
  if (node.correct_terminal()) return true;
  for (const SearchNode* child : node.children) {
    if (correct_reachable(*child)) return true;
  }
  return false;
}

}  // namespace

ExtractOutcome extract_samples(const SearchTree& tree, const SearchConfig& config) {
  ExtractOutcome outcome;
  const SearchNode& root = tree.root();

  std::vector<const SearchNode*> path;
  if (correct_reachable(root)) {
    outcome.found_correct_terminal = true;
    const SearchNode* cur = &root;
    path.push_back(cur);
    while (!cur->correct_terminal()) {
      const SearchNode* next = nullptr;
      for (const SearchNode* child : cur->children) {
        if (child->virtual_node || !correct_reachable(*child)) continue;
        if (!next || child->mean(config.epsilon) > next->mean(config.epsilon)) {
          next = child;  // ties keep the first-created child
        }
      }
      path.push_back(next);
      cur = next;
    }
    for (const SearchNode* node : path) outcome.best_path_ids.push_back(node->id);

    for (std::size_t i = 1; i < path.size(); ++i) {
      const SearchNode* node = path[i];
      PreferenceSample sample;
      sample.context = tree.transcript_for(*node->parent);
      sample.completion = node->assistant_text;
      sample.label = SampleLabel::Positive;
      sample.reason = SampleReason::BestPath;
      sample.origin = origin_path(*node);
      outcome.samples.push_back(std::move(sample));
    }

    // Low-value siblings of path nodes; mean above zero is protected.
    for (std::size_t i = 1; i < path.size(); ++i) {
      const SearchNode* node = path[i];
      for (const SearchNode* sibling : node->parent->children) {
        if (sibling == node || sibling->virtual_node) continue;
        if (sibling->mean(config.epsilon) > 0.0) continue;
        PreferenceSample sample;
        sample.context = tree.transcript_for(*sibling->parent);
        sample.completion = sibling->assistant_text;
        sample.label = SampleLabel::Negative;
        sample.reason = SampleReason::LowValueSibling;
        sample.origin = origin_path(*sibling);
        outcome.samples.push_back(std::move(sample));
      }
    }
  }

  for (const auto& node : tree.nodes()) {
    if (node->virtual_node && node->virtual_reason == VirtualReason::RenderError) {
      PreferenceSample sample;
      sample.context = tree.transcript_for(*node->parent);
      sample.completion = node->assistant_text;
      sample.label = SampleLabel::Negative;
      sample.reason = SampleReason::RenderError;
      sample.origin = origin_path(*node);
      outcome.samples.push_back(std::move(sample));
    }
  }

  for (const DuplicateRecord& dup : tree.duplicates()) {
    const SearchNode* parent = tree.node_by_id(dup.parent_id);
    if (!parent) continue;
    PreferenceSample sample;
    sample.context = tree.transcript_for(*parent);
    sample.completion = dup.assistant_text;
    sample.label = SampleLabel::Negative;
    sample.reason = SampleReason::Duplicate;
    sample.origin = "dup:" + std::to_string(dup.parent_id);
    outcome.samples.push_back(std::move(sample));
  }

  // No sample appears twice, whatever rule produced it first.
  std::set<std::string> seen;
  std::vector<PreferenceSample> unique;
  unique.reserve(outcome.samples.size());
  for (PreferenceSample& sample : outcome.samples) {
    std::string key = normalize_transcript(sample.context) + '\x01' +
                      sample.completion + '\x01' +
                      std::string(to_string(sample.label));
    if (seen.insert(std::move(key)).second) unique.push_back(std::move(sample));
  }
  outcome.samples = std::move(unique);
  return outcome;
}

namespace {

json context_to_json(const std::vector<Message>& messages) {
  json arr = json::array();
  for (const Message& m : messages) {
    json content = json::array();
    for (const MessagePart& part : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        json p{{"type", "image"}};
        if (!img.path.empty()) p["path"] = img.path;
        content.push_back(std::move(p));
      }
    }
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", std::move(content)}});
  }
  return arr;
}

}  // namespace

std::string tree_to_json(const SearchTree& tree, const SearchStats& stats,
                         const SearchNode* best) {
  json doc;
  doc["question"] = tree.question();
  doc["gold"] = tree.gold();
  doc["stats"] = {{"iterations", stats.iterations},
                  {"backprops", stats.backprops},
                  {"successes", stats.successes},
                  {"model_failures", stats.model_failures},
                  {"early_stop", stats.early_stop},
                  {"no_viable_child", stats.no_viable_child}};
  doc["best_id"] = best ? json(best->id) : json(nullptr);
  json nodes = json::array();
  for (const auto& node : tree.nodes()) {
    json n;
    n["id"] = node->id;
    n["parent_id"] = node->parent ? json(node->parent->id) : json(nullptr);
    n["q"] = node->q;
    n["n"] = node->visits;
    n["depth"] = node->depth;
    n["terminal"] = node->terminal;
    n["virtual"] = node->virtual_node;
    n["full"] = node->full;
    n["rolled"] = node->rolled;
    n["reward"] = node->reward;
    n["canonical_code"] = node->canonical_code;
    n["text"] = node->assistant_text;
    n["bitmap_path"] = node->bitmap_path;
    if (node->virtual_node) {
      n["virtual_reason"] = node->virtual_reason == VirtualReason::RenderError
                                ? "render-error"
                                : "invalid-reflection";
      n["failure_detail"] = node->failure_detail;
    }
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  json dups = json::array();
  for (const DuplicateRecord& d : tree.duplicates()) {
    dups.push_back({{"parent_id", d.parent_id},
                    {"text", d.assistant_text},
                    {"canonical_code", d.canonical_code}});
  }
  doc["duplicates"] = std::move(dups);
  return doc.dump(2);
}

std::string sample_to_json(const PreferenceSample& sample) {
  json doc;
  doc["messages"] = context_to_json(sample.context);
  doc["completion"] = sample.completion;
  doc["label"] = std::string(to_string(sample.label));
  doc["reason"] = std::string(to_string(sample.reason));
  doc["origin"] = sample.origin;
  return doc.dump();
}

void write_samples_jsonl(const std::vector<PreferenceSample>& samples,
                         const std::string& path, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write samples file: " + path);
  for (const PreferenceSample& sample : samples) {
    out << sample_to_json(sample) << '\n';
  }
}

}  // namespace sketcher
