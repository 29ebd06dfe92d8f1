#include "sketcher/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace sketcher {

using json = nlohmann::json;

const std::string_view kDistillationPrompt = R"(Your task is to output a simulated human-like reasoning dialogue. Since you cannot draw directly, all drawing operations must be expressed in pseudocode enclosed between the keywords BEGIN and END. The following are the requirements for the simulated dialogue:

- Do not reveal the final answer before completing the reasoning process. The answer must be derived from the reasoning steps.
- The BEGIN and END markers should be embedded within the text, and I will parse them automatically to generate the drawings.
- Your output should be conversational, interspersed with brief drawing instructions. Avoid drawing too much at once. To solve any given problem, you must draw at least twice.
- If solving a problem involving X or Y axes, you must draw auxiliary lines on the X or Y axis to locate the target.
- If the series label is shown, you do not need to align the value to the coordinate axes to obtain the number. If the label is not shown, you can align it to the coordinate axis or infer the value from other evidence.
- The output format should be similar to:
  "First, I will circle xx... BEGIN ... END. Hmm, it looks like I have drawn... Then I will... BEGIN ... END."
  After each drawing, act as if you can visually interpret the content you have drawn to make the explanation vivid.
- You must not use exhaustive methods for drawing. Draw only what is relevant to the question. For instance, if the X-axis line is missing, you need to infer the content. Partial conclusions must be derived through drawing.

Specific instructions are as follows:
1. Check and output whether all the data points involved have series label show information.
   - If series label show=True, there is no need to align the data points to the numerical axis; simply state the values based on the series label position.
   - If series label show=False, draw auxiliary lines to align the data points to the numerical axis for accurate evaluation.

2. There is no legend area annotation, so do not use rectangle to draw the legend area. Instead, use colors to describe the legend.
3. Do not reveal that you can see annotations or metadata.

Your output should be a string that simulates a human reasoning dialogue, with no additional content.)";

const std::string_view kReflectiveEditPrompt = R"(I need you to modify and refine the following dialogue by injecting reflective processes, replacing the originally completely correct solution process.

The method is as follows: Using BEGIN and END as boundaries, everything between and including END and what comes before it is called the "former part," and everything after END is called the "latter part." To create reflection, you first need to introduce an error.

The error type should be: coordinate errors between BEGIN and END in the former part, replacing them with coordinates of other points. Subsequently, you should correct the error by discovering and fixing it in the latter part, outputting new BEGIN and END commands to complete the dialogue.

Keep the language fluent and conversational. Let me further explain: The content between BEGIN and END is an operation, and you will "see" the result of the operation after END. Therefore, your reflection process must occur immediately after the END output, not after the erroneous reasoning concludes.

Note that there is no legend area; if you see one, you should remove it and use colors to describe the legend instead. Do not include any comments in the instructions, as the instruction code does not support comments. Do not include any hints that you are deliberately making errors.

The reflection must be brief and accurate, keeping the dialogue concise and organized. You should directly modify the dialogue rather than reflecting after erroneous reasoning ends. For example: ...BEGIN instruction END
Wait/Hold on/Oh/Hmm, I might have made a mistake... (explain the reason for the mistake)... I'll redraw it now. BEGIN instruction END...

Here is the dialogue you need to modify:)";

namespace {

constexpr std::size_t kEndTokenLength = 3;  // "END"

}  // namespace

SegmentResult segment(const std::string& chain_id, const std::string& question,
                      std::shared_ptr<const Image> base_image,
                      const std::string& raw_reasoning,
                      const PipelineConfig& config) {
  ParseOptions parse_opts{config.strict_coords};
  ExtractResult extracted = extract_blocks(raw_reasoning, parse_opts);
  if (!extracted.ok()) {
    std::string detail;
    for (const ParseDiagnostic& d : extracted.diagnostics) {
      if (!detail.empty()) detail += "; ";
      detail += format_diagnostic(d);
    }
    return {std::nullopt, SegmentError{SegmentError::Kind::ParseFailure, detail}};
  }
  if (extracted.scripts.empty()) {
    return {std::nullopt,
            SegmentError{SegmentError::Kind::NoBlocks, "no drawing blocks in reasoning"}};
  }

  CoTRecord record;
  record.chain_id = chain_id;
  record.question = question;
  record.base_image = std::move(base_image);
  record.raw_reasoning = raw_reasoning;

  Canvas canvas(record.base_image);
  std::size_t cursor = 0;
  for (const Script& script : extracted.scripts) {
    std::size_t cut = script.span_end + kEndTokenLength;  // end of the END token
    record.turns.push_back(Message::text(
        Role::Assistant, raw_reasoning.substr(cursor, cut - cursor)));
    cursor = cut;

    ApplyResult applied = apply(canvas, script);
    if (!applied.ok()) {
      return {std::nullopt, SegmentError{SegmentError::Kind::ApplyFailure,
                                         applied.error->message}};
    }
    canvas = std::move(*applied.canvas);
    record.turns.push_back(
        feedback_message(encode_png(rasterize(canvas, config.render))));
  }
  if (cursor < raw_reasoning.size()) {
    record.turns.push_back(
        Message::text(Role::Assistant, raw_reasoning.substr(cursor)));
  }
  return {std::move(record), std::nullopt};
}

std::string reconstruct_reasoning(const CoTRecord& record) {
  std::string out;
  for (const Message& m : record.turns) {
    if (m.role == Role::Assistant) out += m.joined_text();
  }
  return out;
}

InjectResult inject_reflection(const CoTRecord& record, ModelClient& model,
                               double temperature, const PipelineConfig& config) {
  if (record.reflective) {
    return {std::nullopt, "record is already reflective"};
  }
  std::vector<Message> prompt;
  prompt.push_back(Message::text(
      Role::User, std::string(kReflectiveEditPrompt) + "\n\n" + record.raw_reasoning));
  std::string reply = model.complete(prompt, temperature, 1).at(0);

  ParseOptions parse_opts{config.strict_coords};
  ExtractResult original = extract_blocks(record.raw_reasoning, parse_opts);
  ExtractResult edited = extract_blocks(reply, parse_opts);
  if (!edited.ok()) {
    std::string detail;
    for (const ParseDiagnostic& d : edited.diagnostics) {
      if (!detail.empty()) detail += "; ";
      detail += format_diagnostic(d);
    }
    return {std::nullopt, "edited dialogue no longer parses: " + detail};
  }
  if (edited.scripts.size() < original.scripts.size() + 1) {
    return {std::nullopt, "no corrective block was added"};
  }

  // Locate the injected error: the first block whose canonical code differs
  // from the original sequence.
  std::size_t divergence = original.scripts.size();
  for (std::size_t i = 0; i < original.scripts.size(); ++i) {
    if (canonicalize(edited.scripts[i]) != canonicalize(original.scripts[i])) {
      divergence = i;
      break;
    }
  }
  if (divergence == original.scripts.size()) {
    return {std::nullopt, "no original block was modified"};
  }
  std::string erroneous = canonicalize(edited.scripts[divergence]);
  bool corrected = false;
  for (std::size_t j = divergence + 1; j < edited.scripts.size(); ++j) {
    if (canonicalize(edited.scripts[j]) != erroneous) {
      corrected = true;
      break;
    }
  }
  if (!corrected) {
    return {std::nullopt, "corrective block does not differ from the erroneous one"};
  }

  SegmentResult seg = segment(record.chain_id, record.question, record.base_image,
                              reply, config);
  if (!seg.ok()) {
    return {std::nullopt, "edited dialogue does not re-segment: " + seg.error->detail};
  }
  seg.record->reflective = true;
  seg.record->image_path = record.image_path;
  return {std::move(seg.record), {}};
}

namespace {

// Seeded Fisher-Yates; kept independent of std::shuffle so the order is
// identical on every platform.
template <typename T>
void deterministic_shuffle(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace

MixResult mix(const std::vector<CoTRecord>& reflective,
              const std::vector<CoTRecord>& plain, const MixConfig& config) {
  MixResult result;
  double fraction = config.reflective_fraction;
  if (fraction < 0.0 || fraction > 1.0) {
    result.error = "reflective_fraction must lie in [0,1]";
    return result;
  }
  if (fraction > 0.0 && fraction < 1.0 && (reflective.empty() || plain.empty())) {
    result.error = "insufficient-records: both pools must be nonempty";
    return result;
  }

  std::mt19937_64 rng(config.shuffle_seed);
  std::vector<std::size_t> r_order(reflective.size());
  std::vector<std::size_t> p_order(plain.size());
  for (std::size_t i = 0; i < r_order.size(); ++i) r_order[i] = i;
  for (std::size_t i = 0; i < p_order.size(); ++i) p_order[i] = i;
  deterministic_shuffle(r_order, rng);
  deterministic_shuffle(p_order, rng);

  const long total_pool = static_cast<long>(reflective.size() + plain.size());
  long chosen_r = -1, chosen_p = -1;
  for (long total = total_pool; total >= 1; --total) {
    long n_r = std::lround(total * fraction);
    long n_p = total - n_r;
    if (n_r < 0 || n_p < 0 || n_r > static_cast<long>(reflective.size()) ||
        n_p > static_cast<long>(plain.size())) {
      continue;
    }
    // Twins of the selected reflective records are barred from the plain side.
    std::vector<std::string> taken_ids;
    taken_ids.reserve(n_r);
    for (long i = 0; i < n_r; ++i) taken_ids.push_back(reflective[r_order[i]].chain_id);
    std::sort(taken_ids.begin(), taken_ids.end());
    long available_plain = 0;
    for (std::size_t idx : p_order) {
      if (!std::binary_search(taken_ids.begin(), taken_ids.end(), plain[idx].chain_id)) {
        ++available_plain;
      }
    }
    if (n_p > available_plain) continue;

    chosen_r = n_r;
    chosen_p = n_p;
    std::vector<CoTRecord> out;
    out.reserve(total);
    for (long i = 0; i < n_r; ++i) out.push_back(reflective[r_order[i]]);
    long taken_p = 0;
    for (std::size_t idx : p_order) {
      if (taken_p >= n_p) break;
      if (std::binary_search(taken_ids.begin(), taken_ids.end(), plain[idx].chain_id)) {
        continue;
      }
      out.push_back(plain[idx]);
      ++taken_p;
    }
    deterministic_shuffle(out, rng);
    result.records = std::move(out);
    break;
  }
  if (chosen_r < 0 && chosen_p < 0) {
    result.error = "insufficient-records: fraction unachievable from the given pools";
  }
  return result;
}

namespace {

json turns_to_json(const CoTRecord& record, std::vector<std::string>& image_paths) {
  json arr = json::array();
  for (const Message& m : record.turns) {
    json content = json::array();
    for (const MessagePart& part : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        json p{{"type", "image"}};
        if (!img.path.empty()) {
          p["path"] = img.path;
          image_paths.push_back(img.path);
        }
        content.push_back(std::move(p));
      }
    }
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", std::move(content)}});
  }
  return arr;
}

}  // namespace

std::string record_to_json(const CoTRecord& record) {
  json doc;
  std::vector<std::string> image_paths;
  doc["chain_id"] = record.chain_id;
  doc["question"] = record.question;
  doc["image"] = record.image_path;
  doc["reflective"] = record.reflective;
  doc["reasoning"] = record.raw_reasoning;
  doc["messages"] = turns_to_json(record, image_paths);
  doc["images"] = image_paths;
  return doc.dump();
}

std::vector<ReasoningInput> read_reasoning_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reasoning inputs: " + path);
  std::vector<ReasoningInput> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    ReasoningInput input;
    input.id = doc.value("id", "r" + std::to_string(line_no));
    input.question = doc.value("question", "");
    input.image_path = doc.value("image", "");
    input.reasoning = doc.value("reasoning", "");
    out.push_back(std::move(input));
  }
  return out;
}

void write_records_jsonl(const std::vector<CoTRecord>& records,
                         const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write records: " + path);
  for (const CoTRecord& record : records) out << record_to_json(record) << '\n';
}

std::vector<CoTRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records: " + path);
  std::vector<CoTRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    CoTRecord record;
    record.chain_id = doc.value("chain_id", "");
    record.question = doc.value("question", "");
    record.image_path = doc.value("image", "");
    record.reflective = doc.value("reflective", false);
    record.raw_reasoning = doc.value("reasoning", "");
    if (doc.contains("messages")) {
      for (const auto& m : doc["messages"]) {
        Message msg;
        msg.role = role_from_string(m.value("role", "user")).value_or(Role::User);
        for (const auto& piece : m.value("content", json::array())) {
          std::string type = piece.value("type", "text");
          if (type == "text") {
            msg.parts.push_back(TextPart{piece.value("text", "")});
          } else {
            msg.parts.push_back(ImagePart{{}, piece.value("path", "")});
          }
        }
        record.turns.push_back(std::move(msg));
      }
    }
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace sketcher
