#pragma once

#include <memory>
#include <string>

#include "sketcher/model.hpp"

namespace sketcher {

enum class Vote { Correct, Incorrect };

// Answer-correctness oracle.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual Vote verdict(const std::string& final_answer, const std::string& gold) = 0;
  // Deterministic judges let voting short-circuit after one ballot.
  virtual bool deterministic() const { return false; }
};

// Trim + case-fold comparison, with a relative 1e-6 tolerance when both
// sides parse as numbers.
class ExactMatchJudge : public Judge {
 public:
  Vote verdict(const std::string& final_answer, const std::string& gold) override;
  bool deterministic() const override { return true; }

  static std::string normalize(const std::string& text);
};

// Asks a model endpoint whether the answer matches the reference.
class ModelJudge : public Judge {
 public:
  explicit ModelJudge(std::shared_ptr<ModelClient> model, double temperature = 0.0);

  Vote verdict(const std::string& final_answer, const std::string& gold) override;

  static std::string build_prompt(const std::string& final_answer, const std::string& gold);

 private:
  std::shared_ptr<ModelClient> model_;
  double temperature_;
};

}  // namespace sketcher
