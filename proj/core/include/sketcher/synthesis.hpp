#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sketcher/model.hpp"
#include "sketcher/pipeline.hpp"

namespace sketcher {

// Prompt sent to the teacher model when distilling drawing-annotated
// reasoning from text QA pairs. The record's question and annotations are
// appended by the caller.
extern const std::string_view kDistillationPrompt;

// Prompt that rewrites a correct reasoning dialogue into one that makes a
// coordinate mistake and then corrects it. The dialogue to modify is
// appended after the template.
extern const std::string_view kReflectiveEditPrompt;

// One training chain: the raw reasoning text and its segmentation into a
// feedback-interleaved dialogue. Reflective and plain versions of the same
// chain share chain_id.
struct CoTRecord {
  std::string chain_id;
  std::string question;
  std::string image_path;
  std::shared_ptr<const Image> base_image;
  std::string raw_reasoning;
  std::vector<Message> turns;
  bool reflective = false;
};

struct SegmentError {
  enum class Kind { NoBlocks, ParseFailure, ApplyFailure };
  Kind kind = Kind::NoBlocks;
  std::string detail;
};

struct SegmentResult {
  std::optional<CoTRecord> record;
  std::optional<SegmentError> error;
  bool ok() const { return record.has_value(); }
};

// Splits raw reasoning at each block's END into assistant turns, inserting
// a rendered feedback turn after each block; trailing text becomes the
// final assistant turn. Canvas semantics match pipeline steps. Records with
// zero valid blocks or failing parse/apply are rejected.
SegmentResult segment(const std::string& chain_id, const std::string& question,
                      std::shared_ptr<const Image> base_image,
                      const std::string& raw_reasoning,
                      const PipelineConfig& config = {});

// Removing feedback turns and concatenating assistant texts reverses
// segment() exactly.
std::string reconstruct_reasoning(const CoTRecord& record);

struct InjectResult {
  std::optional<CoTRecord> record;
  std::string error;  // nonempty on validation failure
  bool ok() const { return record.has_value(); }
};

// Sends the reflective-edit prompt for a non-reflective record, then checks
// the returned dialogue still parses, gained at least one block (the
// corrective redraw), actually diverges from the original in canonical code,
// and re-segments cleanly.
InjectResult inject_reflection(const CoTRecord& record, ModelClient& model,
                               double temperature = 0.7,
                               const PipelineConfig& config = {});

struct MixConfig {
  double reflective_fraction = 0.5;
  std::uint64_t shuffle_seed = 0;
};

struct MixResult {
  std::vector<CoTRecord> records;
  std::string error;  // nonempty when the fraction is unachievable
  bool ok() const { return error.empty(); }
};

// Seeded deterministic blend hitting the fraction within one record.
// Reflective/plain twins (same chain_id) are never both included.
MixResult mix(const std::vector<CoTRecord>& reflective,
              const std::vector<CoTRecord>& plain, const MixConfig& config);

std::string record_to_json(const CoTRecord& record);

// Raw inputs for segmentation: JSON Lines of
// {"id": ..., "question": ..., "image": ..., "reasoning": ...}.
struct ReasoningInput {
  std::string id;
  std::string question;
  std::string image_path;
  std::string reasoning;
};
std::vector<ReasoningInput> read_reasoning_inputs(const std::string& path);

void write_records_jsonl(const std::vector<CoTRecord>& records,
                         const std::string& path);
std::vector<CoTRecord> read_records_jsonl(const std::string& path);

}  // namespace sketcher
