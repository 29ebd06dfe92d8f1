#include "sketcher/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace sketcher {

using json = nlohmann::json;

namespace {

QaItem item_from_json(const json& doc, const std::string& fallback_id) {
  QaItem item;
  item.id = doc.value("id", fallback_id);
  item.question = doc.value("question", "");
  item.gold = doc.value("gold", doc.value("answer", ""));
  item.image_path = doc.value("image", "");
  if (doc.contains("annotation")) item.annotation = doc["annotation"].dump();
  if (item.question.empty()) {
    throw std::runtime_error("dataset record " + fallback_id + " has no question");
  }
  return item;
}

}  // namespace

std::vector<QaItem> read_qa_dataset(const std::string& path) {
  std::vector<QaItem> items;
  namespace fs = std::filesystem;

  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      std::ifstream in(file);
      json doc = json::parse(in, nullptr, false);
      if (doc.is_discarded()) {
        throw std::runtime_error("invalid JSON in " + file.string());
      }
      items.push_back(item_from_json(doc, file.stem().string()));
    }
    return items;
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    items.push_back(item_from_json(doc, "item" + std::to_string(line_no)));
  }
  return items;
}

}  // namespace sketcher
