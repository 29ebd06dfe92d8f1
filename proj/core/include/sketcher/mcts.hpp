#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sketcher/canvas.hpp"
#include "sketcher/judge.hpp"
#include "sketcher/model.hpp"
#include "sketcher/pipeline.hpp"

namespace sketcher {

// Search hyperparameters. The "paper-training" profile carries the
// alternate published values (exploration constant 3.0, 15 simulations).
struct SearchConfig {
  int sim_limit = 25;          // iteration cap (SIM_lim)
  int success_limit = 3;       // early-stop success quota (SUCC_lim)
  int max_depth = 8;           // dialogue depth cap (MAX_DEPTH)
  int expansion_samples = 6;   // completions sampled per expansion (C_max)
  int max_children = 3;        // non-virtual children cap (MAX_CHILD)
  double t_high = 0.9;         // expansion temperature
  double t_low = 0.4;          // rollout temperature
  double c_puct = 1.9;         // exploration constant
  double lambda_len = 0.05;    // depth penalty weight
  double epsilon = 1e-8;       // division guard
  int model_retry_limit = 2;   // tolerated consecutive model failures

  static SearchConfig defaults() { return {}; }
  static SearchConfig paper_training();
  static std::optional<SearchConfig> profile(std::string_view name);

  // Throws std::invalid_argument unless sim_limit, success_limit and
  // max_depth are >= 1, 1 <= max_children <= expansion_samples, and
  // epsilon > 0.
  void validate() const;
};

enum class VirtualReason { None, RenderError, InvalidReflection };

struct SearchNode {
  int id = 0;
  SearchNode* parent = nullptr;
  std::vector<SearchNode*> children;  // creation order

  std::string assistant_text;  // dialogue delta added at this node
  std::string canonical_code;  // canonical drawing code ("" when none parsed)
  Canvas canvas;               // snapshot after applying this node's blocks
  std::vector<std::uint8_t> feedback_png;
  std::string bitmap_path;
  std::string failure_detail;  // parse/apply error text for virtual nodes

  double q = 0;     // cumulative reward
  int visits = 0;   // visit count
  int depth = 0;    // assistant turns from root
  double reward = 0;

  bool terminal = false;
  bool virtual_node = false;
  bool full = false;
  bool rolled = false;
  VirtualReason virtual_reason = VirtualReason::None;

  double mean(double epsilon) const { return q / (visits + epsilon); }
  bool expandable(const SearchConfig& config) const {
    return !terminal && !virtual_node && !full && depth < config.max_depth;
  }
  int non_virtual_child_count() const;
  bool correct_terminal() const { return terminal && reward >= 1.0; }
};

// Drawing code discarded at expansion because a sibling already produced it.
struct DuplicateRecord {
  int parent_id = 0;
  std::string assistant_text;
  std::string canonical_code;
};

class SearchTree {
 public:
  SearchTree(std::string question, std::string gold,
             std::shared_ptr<const Image> base_image,
             std::vector<Message> root_messages);

  SearchNode& root() { return *nodes_.front(); }
  const SearchNode& root() const { return *nodes_.front(); }

  SearchNode& add_child(SearchNode& parent);
  const std::vector<std::unique_ptr<SearchNode>>& nodes() const { return nodes_; }
  SearchNode* node_by_id(int id);
  const SearchNode* node_by_id(int id) const;

  std::vector<DuplicateRecord>& duplicates() { return duplicates_; }
  const std::vector<DuplicateRecord>& duplicates() const { return duplicates_; }
  bool record_duplicate(const SearchNode& parent, std::string text, std::string code);

  // Messages the model sees when asked to continue from this node.
  std::vector<Message> transcript_for(const SearchNode& node) const;

  const std::string& question() const { return question_; }
  const std::string& gold() const { return gold_; }
  const std::shared_ptr<const Image>& base_image() const { return base_image_; }

 private:
  std::string question_;
  std::string gold_;
  std::shared_ptr<const Image> base_image_;
  std::vector<Message> root_messages_;
  std::vector<std::unique_ptr<SearchNode>> nodes_;
  std::vector<DuplicateRecord> duplicates_;
};

struct SearchStats {
  int iterations = 0;   // completed select/expand/rollout/backprop cycles
  int backprops = 0;
  int successes = 0;    // correct terminals found during expansion
  int model_failures = 0;
  bool early_stop = false;
  bool no_viable_child = false;
};

struct SearchRequest {
  std::string question;
  std::string gold;
  std::shared_ptr<const Image> base_image;
  std::string base_image_path;  // recorded in serialized contexts
  std::string artifact_dir;     // when set, feedback bitmaps land here
};

struct SearchResult {
  std::unique_ptr<SearchTree> tree;
  SearchNode* best = nullptr;  // non-virtual root child with maximal mean
  SearchStats stats;
};

// Depth-aware upper confidence bound:
//   Q/(N+eps) + c_puct*sqrt(ln(parent.N+1)/(N+eps))
//     - lambda_len*(0.01*depth + 0.3*(e^(0.7*max(0,depth-4)) - 1))
double ucb(const SearchNode& node, const SearchConfig& config);

// Walks from the root toward the non-virtual child maximizing ucb, stopping
// at the first expandable node or at a leaf. Ties break to the
// first-created child.
SearchNode& select(SearchNode& root, const SearchConfig& config);

// Adds reward to every non-virtual node on the path from node to the root,
// inclusive; virtual ancestors are skipped entirely.
void backprop(SearchNode& node, double reward);

// Samples up to expansion_samples completions at t_high and files each as a
// terminal child (judged, counted toward the success quota and backpropped),
// a virtual child (render failure or subset-of-parent reflection), a
// recorded duplicate, or a regular child, until the non-virtual child cap.
std::vector<SearchNode*> expand(SearchTree& tree, SearchNode& node,
                                ModelClient& model, Judge& judge,
                                const SearchConfig& config,
                                const PipelineConfig& pipeline,
                                SearchStats& stats);

// Greedy low-temperature continuation until no-code, render failure, or the
// depth cap; stores the reward on the node without adding tree nodes.
double rollout(SearchTree& tree, SearchNode& node, ModelClient& model,
               Judge& judge, const SearchConfig& config,
               const PipelineConfig& pipeline);

SearchResult search(const SearchRequest& request, ModelClient& model,
                    Judge& judge, const SearchConfig& config,
                    const PipelineConfig& pipeline);

enum class SampleLabel { Positive, Negative };
enum class SampleReason { BestPath, LowValueSibling, RenderError, Duplicate };

std::string_view to_string(SampleLabel label);
std::string_view to_string(SampleReason reason);

struct PreferenceSample {
  std::vector<Message> context;
  std::string completion;
  SampleLabel label = SampleLabel::Positive;
  SampleReason reason = SampleReason::BestPath;
  std::string origin;  // node path such as "0/2/5", or "dup:<parent id>"
};

struct ExtractOutcome {
  std::vector<PreferenceSample> samples;
  bool found_correct_terminal = false;
  std::vector<int> best_path_ids;  // root..terminal node ids
};

// Mines preference samples from a finished tree: positives along the
// best path (greedy max-mean descent restricted to branches that reach a
// correct terminal), negatives from zero-value siblings of path nodes,
// render-error virtual nodes, and recorded duplicates. Siblings with mean
// value above zero are never negatives.
ExtractOutcome extract_samples(const SearchTree& tree, const SearchConfig& config);

std::string tree_to_json(const SearchTree& tree, const SearchStats& stats,
                         const SearchNode* best);
std::string sample_to_json(const PreferenceSample& sample);
void write_samples_jsonl(const std::vector<PreferenceSample>& samples,
                         const std::string& path, bool append = false);

}  // namespace sketcher
