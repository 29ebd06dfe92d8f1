#include "sketcher/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace sketcher {

using json = nlohmann::json;

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Running: return "running";
    case SessionStatus::Finished: return "finished";
    case SessionStatus::RenderFailed: return "render-failed";
    case SessionStatus::TurnCapped: return "turn-capped";
  }
  return "running";
}

std::vector<Message> initial_messages(const std::string& question,
                                      const std::shared_ptr<const Image>& base_image,
                                      const std::string& system_prompt) {
  std::vector<Message> messages;
  if (!system_prompt.empty()) {
    messages.push_back(Message::text(Role::System, system_prompt));
  }
  Message opening;
  opening.role = Role::User;
  opening.parts.push_back(TextPart{question});
  if (base_image) {
    opening.parts.push_back(ImagePart{encode_png(*base_image), {}});
  }
  messages.push_back(std::move(opening));
  return messages;
}

Message feedback_message(std::vector<std::uint8_t> png_bytes, std::string path) {
  Message m;
  m.role = Role::User;
  m.parts.push_back(TextPart{std::string(kFeedbackPreamble)});
  m.parts.push_back(ImagePart{std::move(png_bytes), std::move(path)});
  return m;
}

Session make_session(std::string question, std::shared_ptr<const Image> base_image,
                     const PipelineConfig& config, std::string artifact_dir) {
  Session s;
  s.question = std::move(question);
  s.canvas = Canvas(std::move(base_image));
  s.transcript = initial_messages(s.question, s.canvas.base_image(), config.system_prompt);
  s.artifact_dir = std::move(artifact_dir);
  return s;
}

TurnOutcome apply_turn(const Canvas& canvas, const std::vector<Script>& scripts) {
  TurnOutcome outcome{canvas, std::nullopt, 0, false};
  const int turn_base = canvas.turn();
  for (const Script& script : scripts) {
    for (const Command& cmd : script.commands) {
      // delete and create-on-existing-id both count as reworking a mark
      const std::string* target = nullptr;
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (!std::is_same_v<T, TranslateCmd> &&
                          !std::is_same_v<T, RotateCmd>) {
              target = &c.id;
            }
          },
          cmd);
      if (target) {
        const Entity* existing = outcome.canvas.find(*target);
        if (existing && existing->created_turn <= turn_base) {
          outcome.rethink = true;
        }
      }
    }
    ApplyResult applied = apply(outcome.canvas, script);
    if (!applied.ok()) {
      outcome.error = std::move(applied.error);
      return outcome;
    }
    outcome.canvas = std::move(*applied.canvas);
    ++outcome.applied_scripts;
  }
  return outcome;
}

Session step(Session session, const std::string& assistant_text,
             const PipelineConfig& config) {
  if (session.status != SessionStatus::Running) {
    throw std::logic_error("step() on a session that is not running");
  }
  session.transcript.push_back(Message::text(Role::Assistant, assistant_text));
  ++session.assistant_turns;

  ParseOptions parse_opts{config.strict_coords};
  ExtractResult extracted = extract_blocks(assistant_text, parse_opts);

  if (!extracted.has_code()) {
    session.status = SessionStatus::Finished;
    session.final_answer = assistant_text;
    return session;
  }
  if (!extracted.ok()) {
    session.status = SessionStatus::RenderFailed;
    session.diagnostics = std::move(extracted.diagnostics);
    return session;
  }

  TurnOutcome outcome = apply_turn(session.canvas, extracted.scripts);
  session.canvas = std::move(outcome.canvas);
  if (outcome.rethink) ++session.rethink_turns;
  if (!outcome.ok()) {
    session.status = SessionStatus::RenderFailed;
    session.render_error = std::move(outcome.error);
    return session;
  }

  Image rendered = rasterize(session.canvas, config.render);
  std::vector<std::uint8_t> png = encode_png(rendered);
  ++session.feedback_images;
  std::string path;
  if (!session.artifact_dir.empty()) {
    std::filesystem::create_directories(session.artifact_dir);
    path = session.artifact_dir + "/turn_" + std::to_string(session.feedback_images) + ".png";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(png.data()),
              static_cast<std::streamsize>(png.size()));
  }
  session.transcript.push_back(feedback_message(std::move(png), std::move(path)));
  return session;
}

Session run_session(const std::string& question,
                    std::shared_ptr<const Image> base_image, ModelClient& model,
                    const PipelineConfig& config, std::string artifact_dir) {
  if (config.max_turns < 1) {
    throw std::invalid_argument("max_turns must be >= 1");
  }
  Session session = make_session(question, std::move(base_image), config,
                                 std::move(artifact_dir));
  while (session.status == SessionStatus::Running) {
    std::vector<std::string> replies =
        model.complete(session.transcript, config.temperature, 1);
    session = step(std::move(session), replies.at(0), config);
    if (session.status == SessionStatus::Running &&
        session.assistant_turns >= config.max_turns) {
      session.status = SessionStatus::TurnCapped;
    }
  }
  return session;
}

namespace {

json message_to_json(const Message& m) {
  json parts = json::array();
  for (const MessagePart& part : m.parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      parts.push_back({{"type", "text"}, {"text", t->text}});
    } else {
      const auto& img = std::get<ImagePart>(part);
      json p{{"type", "image"}};
      if (!img.path.empty()) p["path"] = img.path;
      p["bytes"] = img.png.size();
      parts.push_back(std::move(p));
    }
  }
  return json{{"role", std::string(to_string(m.role))}, {"parts", std::move(parts)}};
}

}  // namespace

std::string session_to_json(const Session& session) {
  json doc;
  doc["question"] = session.question;
  doc["status"] = std::string(to_string(session.status));
  if (session.final_answer) {
    doc["final_answer"] = *session.final_answer;
  } else {
    doc["final_answer"] = nullptr;
  }
  doc["assistant_turns"] = session.assistant_turns;
  doc["rethink_turns"] = session.rethink_turns;
  doc["canvas"] = {{"turn", session.canvas.turn()},
                   {"signature", entity_signature(session.canvas)}};
  json diags = json::array();
  for (const ParseDiagnostic& d : session.diagnostics) diags.push_back(format_diagnostic(d));
  doc["diagnostics"] = std::move(diags);
  doc["render_error"] =
      session.render_error ? json(session.render_error->message) : json(nullptr);
  json transcript = json::array();
  for (const Message& m : session.transcript) transcript.push_back(message_to_json(m));
  doc["transcript"] = std::move(transcript);
  return doc.dump(2);
}

void write_session(const Session& session, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write session file: " + path);
  out << session_to_json(session) << '\n';
}

}  // namespace sketcher
