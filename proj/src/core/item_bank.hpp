#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/calibration.hpp"
#include "core/estimation.hpp"
#include "core/types.hpp"

namespace psychbench {

// Item format drives both the response model and how raw responses are
// scored: multiple choice is keyed and scored automatically under 3PL,
// open-ended formats carry human-supplied scores under 2PL / GPC.
enum class ItemFormat { MultipleChoice, OpenDichotomous, OpenPartialCredit };

const char* to_string(ItemFormat format);
ItemFormat item_format_from_string(const std::string& name);

struct BankItem {
  ItemParameters params;
  ItemFormat format = ItemFormat::OpenDichotomous;
  std::optional<std::string> answer_key;  // multiple choice only, "A".."Z"
  std::optional<int> num_options;         // multiple choice, when known
  std::string content_domain;             // optional label, empty = absent
  std::string cognitive_domain;

  void validate() const;
};

// Calibration provenance block persisted with a calibrated bank so banks
// round-trip between the calibration and estimation surfaces.
struct BankCalibrationInfo {
  std::string method = "mml_em";
  QuadratureSpec quadrature;
  bool converged = false;
  int n_cycles = 0;
  double log_marginal_likelihood = 0.0;
  std::vector<std::string> flagged_items;
  std::vector<ItemStandardErrors> standard_errors;  // aligned with bank items
};

class ItemBank {
 public:
  std::string name;
  std::optional<ScaleTransform> scale;
  std::string notes;
  std::vector<BankItem> items;
  std::optional<BankCalibrationInfo> calibration;

  void validate() const;
  ItemSet to_item_set() const;
  int index_of(const std::string& item_id) const;

  std::size_t count_by_format(ItemFormat format) const;

  static ItemBank parse_json_text(const std::string& text);
  static ItemBank load_file(const std::string& path);
  std::string to_json_text() const;
  void save_file(const std::string& path) const;
};

// Attaches calibrated parameters and the provenance block to a copy of the
// template bank (matched by item_id).
ItemBank calibrated_bank(const ItemBank& bank_template, const CalibrationResult& result);

}  // namespace psychbench
