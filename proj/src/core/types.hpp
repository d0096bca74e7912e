#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "core/errors.hpp"

namespace psychbench {

// Logistic metric scaling constant. Fixed; changing it would silently change
// the meaning of every slope parameter in circulation.
inline constexpr double kScalingConstant = 1.7;

// Ability scale is flat to machine precision past this bound under the
// 1.7-scaled logistic; all iterative routines clamp theta to [-kThetaBound, kThetaBound].
inline constexpr double kThetaBound = 6.0;

// Missing cell / not-administered marker in category arrays.
inline constexpr int kMissing = -1;

enum class ModelKind { ThreePL, TwoPL, Gpc };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// One test item's response model and parameters.
//
// Dichotomous items (ThreePL, TwoPL) have num_categories == 2 and use a, b
// (and c for ThreePL). Gpc items have num_categories >= 2 and carry the
// category threshold offsets d_1..d_{m-1}; the implicit d_0 is 0 and the
// stored offsets sum to 0, which pins down the parameterization.
struct ItemParameters {
  std::string item_id;
  ModelKind model = ModelKind::TwoPL;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;                // ThreePL only
  std::vector<double> d;         // Gpc only, size num_categories - 1
  int num_categories = 2;

  // Throws ContractError on any invariant violation.
  void validate() const;

  int max_score() const { return num_categories - 1; }

  static ItemParameters make_3pl(std::string id, double a, double b, double c);
  static ItemParameters make_2pl(std::string id, double a, double b);
  static ItemParameters make_gpc(std::string id, double a, double b, std::vector<double> d);
};

// An item set with id -> index lookup. Items are immutable once the set is built.
class ItemSet {
 public:
  ItemSet() = default;
  explicit ItemSet(std::vector<ItemParameters> items);

  const std::vector<ItemParameters>& items() const { return items_; }
  const ItemParameters& item(std::size_t index) const { return items_[index]; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  // Returns the index for an id, or -1 if unknown.
  int index_of(const std::string& item_id) const;

 private:
  std::vector<ItemParameters> items_;
  std::unordered_map<std::string, int> index_;
};

// One scored response as it appears on the wire: an item id plus a category,
// or kMissing for not administered.
struct ScoredResponse {
  std::string item_id;
  int category = kMissing;
};

// One test taker's scored categories, aligned with an ItemSet by index.
// categories[i] is in [0, m_i - 1] or kMissing.
struct ResponsePattern {
  std::string taker_id;
  std::vector<int> categories;

  std::size_t num_observed() const;

  // Builds a pattern over `items` from explicit responses. Items without a
  // response are kMissing. Throws ContractError on duplicate or unknown item
  // ids and on categories out of range.
  static ResponsePattern from_responses(std::string taker_id,
                                        const std::vector<ScoredResponse>& responses,
                                        const ItemSet& items);
};

// Minimal per-item descriptor a response matrix carries alongside the cells.
struct ItemDescriptor {
  std::string item_id;
  ModelKind model = ModelKind::TwoPL;
  int num_categories = 2;
};

// Rectangular respondents x items table of scored categories (kMissing for
// empty cells). Row-major storage.
struct ResponseMatrix {
  std::vector<std::string> respondent_ids;
  std::vector<ItemDescriptor> items;
  std::vector<int> cells;

  std::size_t num_respondents() const { return respondent_ids.size(); }
  std::size_t num_items() const { return items.size(); }

  int cell(std::size_t respondent, std::size_t item) const {
    return cells[respondent * items.size() + item];
  }
  int& cell(std::size_t respondent, std::size_t item) {
    return cells[respondent * items.size() + item];
  }

  // Every respondent and every item must have at least one observed cell;
  // categories must be within item bounds. Throws ValidationError.
  void validate() const;

  ResponsePattern row_pattern(std::size_t respondent) const;

  // Item descriptors as a calibratable ItemSet with default parameters.
  ItemSet descriptor_item_set() const;
};

}  // namespace psychbench
