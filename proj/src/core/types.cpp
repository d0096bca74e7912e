#include "core/types.hpp"

#include <cmath>
#include <unordered_set>

namespace psychbench {

namespace {

constexpr double kGpcSumTolerance = 1e-9;

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ThreePL: return "3PL";
    case ModelKind::TwoPL: return "2PL";
    case ModelKind::Gpc: return "GPC";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "3PL") return ModelKind::ThreePL;
  if (name == "2PL") return ModelKind::TwoPL;
  if (name == "GPC") return ModelKind::Gpc;
  throw ValidationError("unknown model kind '" + name + "' (expected 3PL, 2PL or GPC)");
}

void ItemParameters::validate() const {
  if (item_id.empty()) throw ContractError("item has empty item_id");
  if (!std::isfinite(a)) throw ContractError("item '" + item_id + "': a is not finite");
  if (!std::isfinite(b)) throw ContractError("item '" + item_id + "': b is not finite");
  switch (model) {
    case ModelKind::ThreePL:
      if (num_categories != 2)
        throw ContractError("item '" + item_id + "': 3PL requires 2 categories");
      if (!(c >= 0.0 && c < 1.0) || !std::isfinite(c))
        throw ContractError("item '" + item_id + "': 3PL requires 0 <= c < 1");
      if (!d.empty())
        throw ContractError("item '" + item_id + "': 3PL must not carry d thresholds");
      break;
    case ModelKind::TwoPL:
      if (num_categories != 2)
        throw ContractError("item '" + item_id + "': 2PL requires 2 categories");
      if (c != 0.0)
        throw ContractError("item '" + item_id + "': 2PL requires c = 0");
      if (!d.empty())
        throw ContractError("item '" + item_id + "': 2PL must not carry d thresholds");
      break;
    case ModelKind::Gpc: {
      if (num_categories < 2)
        throw ContractError("item '" + item_id + "': GPC requires >= 2 categories");
      if (static_cast<int>(d.size()) != num_categories - 1)
        throw ContractError("item '" + item_id + "': GPC requires " +
                            std::to_string(num_categories - 1) + " d entries, got " +
                            std::to_string(d.size()));
      double sum = 0.0;
      for (double dv : d) {
        if (!std::isfinite(dv))
          throw ContractError("item '" + item_id + "': non-finite d threshold");
        sum += dv;
      }
      if (std::abs(sum) > kGpcSumTolerance)
        throw ContractError("item '" + item_id + "': GPC d thresholds must sum to 0, got " +
                            std::to_string(sum));
      if (c != 0.0)
        throw ContractError("item '" + item_id + "': GPC must not carry c");
      break;
    }
  }
}

ItemParameters ItemParameters::make_3pl(std::string id, double a, double b, double c) {
  ItemParameters item;
  item.item_id = std::move(id);
  item.model = ModelKind::ThreePL;
  item.a = a;
  item.b = b;
  item.c = c;
  item.num_categories = 2;
  item.validate();
  return item;
}

ItemParameters ItemParameters::make_2pl(std::string id, double a, double b) {
  ItemParameters item;
  item.item_id = std::move(id);
  item.model = ModelKind::TwoPL;
  item.a = a;
  item.b = b;
  item.num_categories = 2;
  item.validate();
  return item;
}

ItemParameters ItemParameters::make_gpc(std::string id, double a, double b,
                                        std::vector<double> d) {
  ItemParameters item;
  item.item_id = std::move(id);
  item.model = ModelKind::Gpc;
  item.a = a;
  item.b = b;
  item.d = std::move(d);
  item.num_categories = static_cast<int>(item.d.size()) + 1;
  item.validate();
  return item;
}

ItemSet::ItemSet(std::vector<ItemParameters> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    items_[i].validate();
    auto [it, inserted] = index_.emplace(items_[i].item_id, static_cast<int>(i));
    (void)it;
    if (!inserted)
      throw ContractError("duplicate item_id '" + items_[i].item_id + "' in item set");
  }
}

int ItemSet::index_of(const std::string& item_id) const {
  auto it = index_.find(item_id);
  return it == index_.end() ? -1 : it->second;
}

std::size_t ResponsePattern::num_observed() const {
  std::size_t n = 0;
  for (int cat : categories)
    if (cat != kMissing) ++n;
  return n;
}

ResponsePattern ResponsePattern::from_responses(std::string taker_id,
                                                const std::vector<ScoredResponse>& responses,
                                                const ItemSet& items) {
  ResponsePattern pattern;
  pattern.taker_id = std::move(taker_id);
  pattern.categories.assign(items.size(), kMissing);
  for (const ScoredResponse& response : responses) {
    int index = items.index_of(response.item_id);
    if (index < 0)
      throw ContractError("response references unknown item_id '" + response.item_id + "'");
    if (pattern.categories[index] != kMissing)
      throw ContractError("duplicate response for item_id '" + response.item_id + "'");
    if (response.category == kMissing) continue;
    if (response.category < 0 || response.category >= items.item(index).num_categories)
      throw ContractError("category " + std::to_string(response.category) +
                          " out of range for item_id '" + response.item_id + "'");
    pattern.categories[index] = response.category;
  }
  return pattern;
}

void ResponseMatrix::validate() const {
  if (cells.size() != respondent_ids.size() * items.size())
    throw ValidationError("response matrix cell count does not match dimensions");
  {
    std::unordered_set<std::string> seen;
    for (const auto& id : respondent_ids)
      if (!seen.insert(id).second)
        throw ValidationError("duplicate respondent id '" + id + "'");
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& item : items)
      if (!seen.insert(item.item_id).second)
        throw ValidationError("duplicate item id '" + item.item_id + "'");
  }
  std::vector<bool> item_observed(items.size(), false);
  for (std::size_t r = 0; r < respondent_ids.size(); ++r) {
    bool row_observed = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      int cat = cell(r, i);
      if (cat == kMissing) continue;
      if (cat < 0 || cat >= items[i].num_categories)
        throw ValidationError("respondent '" + respondent_ids[r] + "', item '" +
                              items[i].item_id + "': category " + std::to_string(cat) +
                              " out of range");
      row_observed = true;
      item_observed[i] = true;
    }
    if (!row_observed)
      throw ValidationError("respondent '" + respondent_ids[r] + "' has no observed responses");
  }
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!item_observed[i])
      throw ValidationError("item '" + items[i].item_id + "' has no observed responses");
}

ResponsePattern ResponseMatrix::row_pattern(std::size_t respondent) const {
  ResponsePattern pattern;
  pattern.taker_id = respondent_ids[respondent];
  pattern.categories.assign(cells.begin() + respondent * items.size(),
                            cells.begin() + (respondent + 1) * items.size());
  return pattern;
}

ItemSet ResponseMatrix::descriptor_item_set() const {
  std::vector<ItemParameters> set;
  set.reserve(items.size());
  for (const ItemDescriptor& desc : items) {
    ItemParameters item;
    item.item_id = desc.item_id;
    item.model = desc.model;
    item.num_categories = desc.num_categories;
    if (desc.model == ModelKind::Gpc) item.d.assign(desc.num_categories - 1, 0.0);
    set.push_back(std::move(item));
  }
  return ItemSet(std::move(set));
}

}  // namespace psychbench
