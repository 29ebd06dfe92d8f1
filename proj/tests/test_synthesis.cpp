#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "sketcher/synthesis.hpp"
#include "support/fixtures.hpp"

using namespace sketcher;
using namespace sketcher::testing;

namespace {

// A canned model that returns the same text for any prompt.
class FixedReplyModel : public ModelClient {
 public:
  explicit FixedReplyModel(std::string reply) : reply_(std::move(reply)) {}
  std::vector<std::string> complete(std::span<const Message>, double, int n) override {
    return std::vector<std::string>(n, reply_);
  }

 private:
  std::string reply_;
};

const char* kTwoBlockReasoning =
    "First I locate 2015 on the x axis. "
    "BEGIN\ncreate_line g1 0.42 0.1 0.42 0.9 red\nEND\n"
    "The guide sits between 2014 and 2016. Now the intersection. "
    "BEGIN\ncreate_circle m1 0.42 0.43 0.03 blue\nEND\n"
    "The circle lands at 57, so the answer is 57.";

std::string random_reasoning(std::mt19937_64& rng, int blocks) {
  std::string text = "Considering the chart carefully. ";
  for (int b = 0; b < blocks; ++b) {
    double x = 0.05 + 0.001 * static_cast<double>(rng() % 900);
    text += "Step " + std::to_string(b) + ": I mark it. BEGIN\ncreate_point s" +
            std::to_string(b) + " " + format_coord(x) + " 0.400 red\nEND\n";
    if (rng() % 2) text += "Hmm, that looks right. ";
  }
  text += "So the answer is " + std::to_string(rng() % 100) + ".";
  return text;
}

CoTRecord make_record(const std::string& id, const std::string& reasoning) {
  SegmentResult result = segment(id, "what value?", blank_image(), reasoning);
  REQUIRE(result.ok());
  return std::move(*result.record);
}

}  // namespace

TEST_CASE("segmenting a two-block text yields the five-turn dialogue") {
  SegmentResult result = segment("c1", "q", blank_image(), kTwoBlockReasoning);
  REQUIRE(result.ok());
  const CoTRecord& record = *result.record;
  REQUIRE(record.turns.size() == 5);
  CHECK(record.turns[0].role == Role::Assistant);
  CHECK(record.turns[1].role == Role::User);
  CHECK(record.turns[1].has_image());
  CHECK(record.turns[2].role == Role::Assistant);
  CHECK(record.turns[3].role == Role::User);
  CHECK(record.turns[3].has_image());
  CHECK(record.turns[4].role == Role::Assistant);
  // Every assistant chunk before the last ends exactly at its END marker.
  std::string first = record.turns[0].joined_text();
  CHECK(first.substr(first.size() - 3) == "END");
}

TEST_CASE("segmentation is the inverse of concatenation") {
  SegmentResult result = segment("c1", "q", blank_image(), kTwoBlockReasoning);
  REQUIRE(result.ok());
  CHECK(reconstruct_reasoning(*result.record) == kTwoBlockReasoning);
}

TEST_CASE("text with no blocks is rejected with a quality warning") {
  SegmentResult result = segment("c1", "q", blank_image(), "The answer is 12.");
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == SegmentError::Kind::NoBlocks);
}

TEST_CASE("a block that deletes a never-created entity fails segmentation") {
  SegmentResult result = segment("c1", "q", blank_image(),
                                 "Removing it. BEGIN\ndelete ghost\nEND done");
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == SegmentError::Kind::ApplyFailure);
}

TEST_CASE("a block that fails to parse fails segmentation") {
  SegmentResult result = segment("c1", "q", blank_image(),
                                 "BEGIN\ncreate_point p1 0.2 0.2 red # note\nEND");
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == SegmentError::Kind::ParseFailure);
}

TEST_CASE("property: strip-feedback-concatenate is the identity on random texts") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::string reasoning = random_reasoning(rng, 2 + static_cast<int>(rng() % 3));
    SegmentResult result = segment("c", "q", blank_image(), reasoning);
    REQUIRE(result.ok());
    CHECK(reconstruct_reasoning(*result.record) == reasoning);
  }
}

TEST_CASE("segmented records replay through the pipeline with identical canvases") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    std::string reasoning = random_reasoning(rng, 2);
    CoTRecord record = make_record("c", reasoning);

    PipelineConfig config;
    Session session = make_session(record.question, record.base_image, config);
    for (const Message& turn : record.turns) {
      if (turn.role != Role::Assistant) continue;
      if (session.status != SessionStatus::Running) break;
      session = step(std::move(session), turn.joined_text(), config);
    }
    // The final assistant chunk has no code, so the session finishes.
    CHECK(session.status == SessionStatus::Finished);

    Canvas reference(record.base_image);
    ExtractResult blocks = extract_blocks(reasoning);
    for (const Script& script : blocks.scripts) {
      reference = std::move(*apply(reference, script).canvas);
    }
    CHECK(entity_signature(session.canvas) == entity_signature(reference));
  }
}

TEST_CASE("reflection injection accepts a hand-authored corrective edit") {
  CoTRecord record = make_record("c9", kTwoBlockReasoning);
  // The edit misplaces the guide line, then redraws it after the feedback.
  std::string edited =
      "First I locate 2015 on the x axis. "
      "BEGIN\ncreate_line g1 0.62 0.1 0.62 0.9 red\nEND\n"
      "Hmm, that guide sits on 2017, not 2015. Let me redraw it. "
      "BEGIN\ncreate_line g1 0.42 0.1 0.42 0.9 red\nEND\n"
      "Better. Now the intersection. "
      "BEGIN\ncreate_circle m1 0.42 0.43 0.03 blue\nEND\n"
      "The circle lands at 57, so the answer is 57.";
  FixedReplyModel model(edited);
  InjectResult result = inject_reflection(record, model);
  REQUIRE(result.ok());
  CHECK(result.record->reflective);
  CHECK(result.record->chain_id == record.chain_id);
  ExtractResult blocks = extract_blocks(result.record->raw_reasoning);
  CHECK(blocks.scripts.size() == 3);  // original two plus the corrective redraw
}

TEST_CASE("returning the dialogue unchanged is a validation failure") {
  CoTRecord record = make_record("c9", kTwoBlockReasoning);
  FixedReplyModel model(kTwoBlockReasoning);
  InjectResult result = inject_reflection(record, model);
  CHECK_FALSE(result.ok());
  CHECK(result.error.find("corrective") != std::string::npos);
}

TEST_CASE("a comment smuggled into a block is a validation failure") {
  CoTRecord record = make_record("c9", kTwoBlockReasoning);
  std::string edited =
      "First I locate 2015 on the x axis. "
      "BEGIN\ncreate_line g1 0.62 0.1 0.62 0.9 red\n# oops wrong spot\nEND\n"
      "Redrawing. BEGIN\ncreate_line g1 0.42 0.1 0.42 0.9 red\nEND\n"
      "BEGIN\ncreate_circle m1 0.42 0.43 0.03 blue\nEND done, 57.";
  FixedReplyModel model(edited);
  InjectResult result = inject_reflection(record, model);
  CHECK_FALSE(result.ok());
  CHECK(result.error.find("parse") != std::string::npos);
}

TEST_CASE("an edit whose erroneous and corrected blocks match is rejected") {
  CoTRecord record = make_record("c9", kTwoBlockReasoning);
  // Block count grows, but the "correction" repeats the same wrong code.
  std::string edited =
      "First. BEGIN\ncreate_line g1 0.62 0.1 0.62 0.9 red\nEND\n"
      "Wait. BEGIN\ncreate_line g1 0.62 0.1 0.62 0.9 red\nEND\n"
      "BEGIN\ncreate_line g1 0.62 0.1 0.62 0.9 red\nEND\n"
      "Answer 57.";
  FixedReplyModel model(edited);
  InjectResult result = inject_reflection(record, model);
  CHECK_FALSE(result.ok());
}

TEST_CASE("mix hits the exact ratio when both pools suffice") {
  std::vector<CoTRecord> reflective, plain;
  for (int i = 0; i < 100; ++i) {
    CoTRecord r;
    r.chain_id = "r" + std::to_string(i);
    r.reflective = true;
    reflective.push_back(r);
    CoTRecord p;
    p.chain_id = "p" + std::to_string(i);
    plain.push_back(p);
  }
  MixResult result = mix(reflective, plain, {0.5, 7});
  REQUIRE(result.ok());
  CHECK(result.records.size() == 200);
  int n_reflective = 0;
  for (const CoTRecord& r : result.records) n_reflective += r.reflective ? 1 : 0;
  CHECK(n_reflective == 100);
}

TEST_CASE("mix is limited by the smaller pool") {
  std::vector<CoTRecord> reflective, plain;
  for (int i = 0; i < 10; ++i) {
    CoTRecord r;
    r.chain_id = "r" + std::to_string(i);
    r.reflective = true;
    reflective.push_back(r);
  }
  for (int i = 0; i < 100; ++i) {
    CoTRecord p;
    p.chain_id = "p" + std::to_string(i);
    plain.push_back(p);
  }
  MixResult result = mix(reflective, plain, {0.5, 7});
  REQUIRE(result.ok());
  CHECK(result.records.size() == 20);  // 10 + 10
}

TEST_CASE("twins sharing a chain id are never both included") {
  std::vector<CoTRecord> reflective, plain;
  for (int i = 0; i < 40; ++i) {
    CoTRecord r;
    r.chain_id = "chain" + std::to_string(i);
    r.reflective = true;
    reflective.push_back(r);
    CoTRecord p;
    p.chain_id = "chain" + std::to_string(i);  // same chain, plain twin
    plain.push_back(p);
  }
  MixResult result = mix(reflective, plain, {0.5, 3});
  REQUIRE(result.ok());
  std::set<std::string> reflective_ids, plain_ids;
  for (const CoTRecord& r : result.records) {
    (r.reflective ? reflective_ids : plain_ids).insert(r.chain_id);
  }
  for (const std::string& id : reflective_ids) {
    CHECK(plain_ids.count(id) == 0);
  }
  CHECK(result.records.size() == 40);  // 20 + 20 out of 40 twin pairs
}

TEST_CASE("mix is deterministic for a fixed seed and shifts with the seed") {
  std::vector<CoTRecord> reflective, plain;
  for (int i = 0; i < 30; ++i) {
    CoTRecord r;
    r.chain_id = "r" + std::to_string(i);
    r.reflective = true;
    r.raw_reasoning = "rr" + std::to_string(i);
    reflective.push_back(r);
    CoTRecord p;
    p.chain_id = "p" + std::to_string(i);
    p.raw_reasoning = "pp" + std::to_string(i);
    plain.push_back(p);
  }
  MixResult a = mix(reflective, plain, {0.5, 11});
  MixResult b = mix(reflective, plain, {0.5, 11});
  REQUIRE(a.ok());
  std::string doc_a, doc_b;
  for (const CoTRecord& r : a.records) doc_a += record_to_json(r) + "\n";
  for (const CoTRecord& r : b.records) doc_b += record_to_json(r) + "\n";
  CHECK(doc_a == doc_b);

  MixResult c = mix(reflective, plain, {0.5, 12});
  std::string doc_c;
  for (const CoTRecord& r : c.records) doc_c += record_to_json(r) + "\n";
  CHECK(doc_a != doc_c);
}

TEST_CASE("property: the mixed reflective share stays within one record of the target") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<CoTRecord> reflective(1 + rng() % 40);
    std::vector<CoTRecord> plain(1 + rng() % 40);
    for (std::size_t i = 0; i < reflective.size(); ++i) {
      reflective[i].chain_id = "r" + std::to_string(i);
      reflective[i].reflective = true;
    }
    for (std::size_t i = 0; i < plain.size(); ++i) {
      plain[i].chain_id = "p" + std::to_string(i);
    }
    double fraction = static_cast<double>(rng() % 101) / 100.0;
    MixResult result = mix(reflective, plain, {fraction, rng()});
    if (!result.ok()) continue;  // infeasible corners are allowed to refuse
    double n_reflective = 0;
    for (const CoTRecord& r : result.records) n_reflective += r.reflective ? 1 : 0;
    CAPTURE(trial);
    CAPTURE(fraction);
    CHECK(std::abs(n_reflective - fraction * result.records.size()) <= 1.0);
  }
}

TEST_CASE("mix rejects an empty pool for interior fractions") {
  std::vector<CoTRecord> some(3);
  MixResult result = mix({}, some, {0.5, 0});
  CHECK_FALSE(result.ok());
  CHECK(result.error.find("insufficient") != std::string::npos);
}

TEST_CASE("records round-trip through JSONL") {
  CoTRecord record = make_record("cx", kTwoBlockReasoning);
  record.image_path = "charts/base.png";
  std::string path = "/tmp/sketcher_records_test.jsonl";
  write_records_jsonl({record}, path);
  auto back = read_records_jsonl(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].chain_id == "cx");
  CHECK(back[0].raw_reasoning == kTwoBlockReasoning);
  CHECK(back[0].turns.size() == record.turns.size());
}
