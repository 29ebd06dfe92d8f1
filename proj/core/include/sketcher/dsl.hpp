#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sketcher {

// Drawing commands recognized by the sketching language. Coordinates are
// normalized: (0,0) is the top-left corner of the canvas, (1,1) the
// bottom-right. Keywords are case-sensitive.

struct CreatePointCmd {
  std::string id;
  double x = 0, y = 0;
  std::string color;
  bool operator==(const CreatePointCmd&) const = default;
};

struct CreateLineCmd {
  std::string id;
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  std::string color;
  bool operator==(const CreateLineCmd&) const = default;
};

struct CreateCircleCmd {
  std::string id;
  double cx = 0, cy = 0, radius = 0;
  std::string color;
  bool operator==(const CreateCircleCmd&) const = default;
};

struct CreateRectangleCmd {
  std::string id;
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  std::string color;
  bool operator==(const CreateRectangleCmd&) const = default;
};

struct CreateArrowCmd {
  std::string id;
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // tail -> head
  std::string color;
  bool operator==(const CreateArrowCmd&) const = default;
};

struct TranslateCmd {
  std::string id;
  double dx = 0, dy = 0;
  bool operator==(const TranslateCmd&) const = default;
};

struct RotateCmd {
  std::string id;
  double angle = 0;  // degrees, positive = clockwise on screen (y grows down)
  double cx = 0, cy = 0;
  bool operator==(const RotateCmd&) const = default;
};

struct DeleteCmd {
  std::string id;
  bool operator==(const DeleteCmd&) const = default;
};

using Command = std::variant<CreatePointCmd, CreateLineCmd, CreateCircleCmd,
                             CreateRectangleCmd, CreateArrowCmd, TranslateCmd,
                             RotateCmd, DeleteCmd>;

// One parsed BEGIN/END block. Commands appear in source order;
// source_span holds (begin, end) byte offsets of the block body in the
// originating text (exclusive of the BEGIN/END markers themselves).
struct Script {
  std::vector<Command> commands;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;

  bool operator==(const Script& other) const { return commands == other.commands; }
};

enum class DiagnosticKind {
  UnknownCommand,
  ArityError,
  NumberFormat,
  CoordOutOfRange,
  UnknownColor,
  MissingBegin,
  MissingEnd,
};

struct ParseDiagnostic {
  int line = 0;  // 1-based line in the originating text
  DiagnosticKind kind = DiagnosticKind::UnknownCommand;
  std::string message;
};

struct ParseOptions {
  // Strict mode rejects literal unit coordinates outside [0,1]; lenient
  // mode clamps them into range instead.
  bool strict_coords = true;
};

// Result of parsing one block body. Any diagnostic rejects the whole
// block: script is set iff diagnostics is empty.
struct ParseResult {
  std::optional<Script> script;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return script.has_value(); }
};

// Result of scanning a free-form assistant message for BEGIN/END blocks.
struct ExtractResult {
  std::vector<Script> scripts;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
  // True when the message contained drawing code, well-formed or not.
  bool has_code() const { return !scripts.empty() || !diagnostics.empty(); }
};

// Parses the content of a single block (the text between BEGIN and its
// matching END). Blank lines are skipped. line_offset shifts reported
// line numbers so diagnostics can reference the enclosing message.
ParseResult parse_script(std::string_view text, const ParseOptions& opts = {},
                         int line_offset = 0);

// Scans a message left to right. Each standalone BEGIN word opens a block
// closed by the next standalone END; text outside blocks is prose and is
// ignored. An unclosed BEGIN (including a nested BEGIN, which implicitly
// abandons the outer block) yields a missing-end diagnostic and no script
// for that span. Stray END words in prose are ignored.
ExtractResult extract_blocks(std::string_view message,
                             const ParseOptions& opts = {});

// Parses file-level input for the CLI: messages containing a BEGIN word go
// through extract_blocks; input with an END word but no BEGIN yields a
// missing-begin diagnostic; anything else is treated as one bare block body.
ExtractResult parse_source(std::string_view text, const ParseOptions& opts = {});

// Deterministic text form: one command per line, lowercase keywords,
// single-space separators, numbers rounded to three decimals. Equal
// canonical text defines duplicate drawing code.
std::string canonicalize(const Script& script);

// Canonical form of a whole turn: block canonical texts joined by a blank
// line. Block bodies never contain blank lines, so the form is unambiguous.
std::string canonical_code(const std::vector<Script>& scripts);

std::string format_coord(double value);  // the 3-decimal number format

const std::vector<std::string>& supported_colors();
bool is_supported_color(std::string_view name);

std::string_view to_string(DiagnosticKind kind);
std::string format_diagnostic(const ParseDiagnostic& diag);

}  // namespace sketcher
