#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sketcher/canvas.hpp"
#include "sketcher/dsl.hpp"
#include "sketcher/model.hpp"
#include "sketcher/raster.hpp"

namespace sketcher {

// Fixed text accompanying every rendered feedback image.
inline constexpr std::string_view kFeedbackPreamble =
    "Here is the image after your drawing operations.";

enum class SessionStatus { Running, Finished, RenderFailed, TurnCapped };

std::string_view to_string(SessionStatus status);

struct PipelineConfig {
  int max_turns = 12;       // assistant turns per session
  double temperature = 0.4;
  bool strict_coords = true;
  std::string system_prompt;  // optional; empty emits no system message
  RenderConfig render;
};

// One reasoning session: the multi-turn transcript of the draw-feedback
// loop plus the cumulative canvas. Failures are states, not exceptions,
// so tree search can consume them.
struct Session {
  std::string question;
  std::vector<Message> transcript;
  Canvas canvas;
  SessionStatus status = SessionStatus::Running;
  std::optional<std::string> final_answer;
  std::vector<ParseDiagnostic> diagnostics;   // parse failures, when render-failed
  std::optional<RenderError> render_error;    // apply failures, when render-failed
  int assistant_turns = 0;
  int rethink_turns = 0;   // assistant turns that deleted/replaced an earlier turn's entity
  int feedback_images = 0;
  std::string artifact_dir;  // when set, feedback bitmaps land here as turn_<k>.png
};

// Builds the opening transcript: optional system message, then a user turn
// carrying the question text and the base chart image.
std::vector<Message> initial_messages(const std::string& question,
                                      const std::shared_ptr<const Image>& base_image,
                                      const std::string& system_prompt = {});

// The user turn fed back after a drawing step: preamble text plus exactly
// one image part.
Message feedback_message(std::vector<std::uint8_t> png_bytes, std::string path = {});

Session make_session(std::string question,
                     std::shared_ptr<const Image> base_image,
                     const PipelineConfig& config, std::string artifact_dir = {});

// Advances the loop by one assistant turn: records the message, extracts
// and applies drawing blocks, renders once, and appends the feedback turn.
// Zero blocks finishes the session with assistant_text as the final answer;
// parse or apply failures move it to RenderFailed.
Session step(Session session, const std::string& assistant_text,
             const PipelineConfig& config);

// Runs complete/step rounds until the session leaves Running or the turn
// cap is hit (status TurnCapped). Model failures propagate after retries.
Session run_session(const std::string& question,
                    std::shared_ptr<const Image> base_image, ModelClient& model,
                    const PipelineConfig& config, std::string artifact_dir = {});

// Applies one already-extracted assistant turn to a canvas: every script in
// order, all-or-nothing per script. Used by step and by tree expansion.
struct TurnOutcome {
  Canvas canvas;                 // state after the applied prefix
  std::optional<RenderError> error;
  int applied_scripts = 0;
  bool rethink = false;          // deleted or replaced an entity from an earlier turn

  bool ok() const { return !error.has_value(); }
};
TurnOutcome apply_turn(const Canvas& canvas, const std::vector<Script>& scripts);

std::string session_to_json(const Session& session);
void write_session(const Session& session, const std::string& path);

}  // namespace sketcher
