#pragma once

#include <string>
#include <vector>

namespace sketcher {

// One QA item: question, reference answer, chart image path, and optional
// chart annotation payload carried through verbatim.
struct QaItem {
  std::string id;
  std::string question;
  std::string gold;
  std::string image_path;
  std::string annotation;
};

// Reads either a .jsonl file (one record per line) or a directory of
// single-record .json files, sorted by filename.
std::vector<QaItem> read_qa_dataset(const std::string& path);

}  // namespace sketcher
