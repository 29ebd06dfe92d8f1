#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sketcher/judge.hpp"
#include "sketcher/model.hpp"
#include "sketcher/pipeline.hpp"

namespace sketcher::testing {

std::shared_ptr<const Image> blank_image(int w = 200, int h = 150);

// The transcript a session reaches after the given assistant turns, built by
// running the real pipeline. Every turn before the last must carry valid
// drawing blocks (they produce the interleaved feedback).
std::vector<Message> transcript_after(const std::string& question,
                                      std::shared_ptr<const Image> base,
                                      const std::vector<std::string>& turns,
                                      const PipelineConfig& config = {});

// Registers a scripted reply list for the transcript reached after `turns`.
void script_turn(ScriptedModel& model, const std::string& question,
                 std::shared_ptr<const Image> base,
                 const std::vector<std::string>& turns, double temperature,
                 std::vector<std::string> replies,
                 const PipelineConfig& config = {});

// A judge that replays a fixed ballot sequence; nondeterministic by contract.
class ScriptedJudge : public Judge {
 public:
  explicit ScriptedJudge(std::vector<Vote> votes) : votes_(std::move(votes)) {}
  Vote verdict(const std::string&, const std::string&) override;
  int calls() const { return static_cast<int>(next_); }

 private:
  std::vector<Vote> votes_;
  std::size_t next_ = 0;
};

// Deterministic pseudo-random model for search stress tests: replies are a
// pure function of (seed, transcript, temperature band, call ordinal). The
// high band mixes fresh drawings, duplicates, subset redraws, broken
// drawings, and final answers; the low band mostly answers.
class StochasticDrawModel : public ModelClient {
 public:
  StochasticDrawModel(std::uint64_t seed, std::string gold);

  std::vector<std::string> complete(std::span<const Message> messages,
                                    double temperature, int n) override;

 private:
  std::string make_reply(std::uint64_t rng_state,
                         std::span<const Message> messages, bool high_band,
                         const std::string& previous_sample);

  std::uint64_t seed_;
  std::string gold_;
  std::map<std::pair<std::uint64_t, std::string>, int> ordinals_;
  std::mutex mutex_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace sketcher::testing
