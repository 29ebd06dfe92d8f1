#include "support/fixtures.hpp"

#include <cstdio>
#include <stdexcept>

namespace sketcher::testing {

std::shared_ptr<const Image> blank_image(int w, int h) {
  return std::make_shared<Image>(Image(w, h));
}

std::vector<Message> transcript_after(const std::string& question,
                                      std::shared_ptr<const Image> base,
                                      const std::vector<std::string>& turns,
                                      const PipelineConfig& config) {
  Session session = make_session(question, std::move(base), config);
  for (const std::string& text : turns) {
    session = step(std::move(session), text, config);
    if (session.status != SessionStatus::Running) {
      throw std::logic_error("fixture turn did not keep the session running: " + text);
    }
  }
  return session.transcript;
}

void script_turn(ScriptedModel& model, const std::string& question,
                 std::shared_ptr<const Image> base,
                 const std::vector<std::string>& turns, double temperature,
                 std::vector<std::string> replies, const PipelineConfig& config) {
  auto transcript = transcript_after(question, std::move(base), turns, config);
  model.add_response(transcript, temperature, std::move(replies));
}

Vote ScriptedJudge::verdict(const std::string&, const std::string&) {
  if (next_ >= votes_.size()) {
    throw std::logic_error("ScriptedJudge ran out of ballots");
  }
  return votes_[next_++];
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

StochasticDrawModel::StochasticDrawModel(std::uint64_t seed, std::string gold)
    : seed_(seed), gold_(std::move(gold)) {}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double unit_in(std::uint64_t& rng, double lo, double hi) {
  double u = static_cast<double>(splitmix64(rng) % 1000) / 999.0;
  return lo + u * (hi - lo);
}

// First BEGIN/END block found in a previous assistant message, markers
// included, so a reply can redraw exactly what an earlier turn drew.
std::string earlier_block(std::span<const Message> messages) {
  for (const Message& m : messages) {
    if (m.role != Role::Assistant) continue;
    std::string text = m.joined_text();
    auto b = text.find("BEGIN");
    auto e = text.find("END", b == std::string::npos ? 0 : b);
    if (b != std::string::npos && e != std::string::npos) {
      return text.substr(b, e + 3 - b);
    }
  }
  return {};
}

}  // namespace

std::string StochasticDrawModel::make_reply(std::uint64_t rng_state,
                                            std::span<const Message> messages,
                                            bool high_band,
                                            const std::string& previous_sample) {
  std::uint64_t rng = rng_state;
  std::uint64_t roll = splitmix64(rng) % 100;

  auto fresh_drawing = [&]() {
    std::string id = "m" + std::to_string(splitmix64(rng) % 100000);
    std::string x = fixed3(unit_in(rng, 0.05, 0.95));
    std::string y = fixed3(unit_in(rng, 0.05, 0.95));
    return "I will mark the spot.\nBEGIN\ncreate_point " + id + " " + x + " " + y +
           " red\nEND\nChecking the mark now.";
  };

  if (!high_band) {
    // Rollouts mostly answer; occasionally they keep drawing.
    if (roll < 35) return gold_;
    if (roll < 60) return "probably " + std::to_string(splitmix64(rng) % 90);
    return fresh_drawing();
  }

  if (roll < 30) return fresh_drawing();
  if (roll < 40 && !previous_sample.empty()) return previous_sample;  // duplicate code
  if (roll < 50) {
    std::string block = earlier_block(messages);
    if (!block.empty()) return "Let me double check that mark.\n" + block + "\nSame as before.";
    return fresh_drawing();
  }
  if (roll < 57) {
    return "Removing the stale marker.\nBEGIN\ndelete ghost" +
           std::to_string(splitmix64(rng) % 100000) + "\nEND";
  }
  if (roll < 62) {
    return "BEGIN\ncreate_blob b 0.1 0.1 red\nEND";
  }
  if (roll < 82) return gold_;
  return std::to_string(splitmix64(rng) % 90) + " maybe";
}

std::vector<std::string> StochasticDrawModel::complete(
    std::span<const Message> messages, double temperature, int n) {
  check_transcript(messages, n);
  std::uint64_t key_hash = fnv1a64(normalize_transcript(messages));
  std::string band(temperature_band(temperature));
  int ordinal;
  {
    std::lock_guard lock(mutex_);
    ordinal = ordinals_[{key_hash, band}]++;
  }
  std::vector<std::string> out;
  out.reserve(n);
  std::string previous;
  for (int i = 0; i < n; ++i) {
    std::uint64_t state = seed_ ^ key_hash;
    state = state * 1000003ULL + static_cast<std::uint64_t>(ordinal) * 131ULL +
            static_cast<std::uint64_t>(i);
    if (band == "high") state ^= 0x9e3779b9ULL;
    std::string reply = make_reply(state, messages, band == "high", previous);
    previous = reply;
    out.push_back(std::move(reply));
  }
  return out;
}

}  // namespace sketcher::testing
