#include "core/item_bank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

#include "core/csv.hpp"

namespace psychbench {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

double as_double(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "expected an integer");
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : known)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok) fail(path, "unknown field '" + it.key() + "'");
  }
}

json maybe_nan(double value) {
  if (std::isfinite(value)) return value;
  return nullptr;  // serialized as null
}

double nan_or_double(const json& value, const std::string& path) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return as_double(value, path);
}

ScaleTransform parse_scale(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, {"target_mean", "target_sd", "source_mean", "source_sd"}, path);
  ScaleTransform scale;
  scale.target_mean = as_double(require(obj, "target_mean", path), path + ".target_mean");
  scale.target_sd = as_double(require(obj, "target_sd", path), path + ".target_sd");
  scale.source_mean = as_double(require(obj, "source_mean", path), path + ".source_mean");
  scale.source_sd = as_double(require(obj, "source_sd", path), path + ".source_sd");
  scale.validate();
  return scale;
}

ordered_json scale_to_json(const ScaleTransform& scale) {
  ordered_json out;
  out["target_mean"] = scale.target_mean;
  out["target_sd"] = scale.target_sd;
  out["source_mean"] = scale.source_mean;
  out["source_sd"] = scale.source_sd;
  return out;
}

BankItem parse_item(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj,
                      {"item_id", "format", "model", "num_categories", "a", "b", "c", "d",
                       "answer_key", "num_options", "content_domain", "cognitive_domain"},
                      path);
  BankItem item;
  item.params.item_id = as_string(require(obj, "item_id", path), path + ".item_id");
  item.format = item_format_from_string(
      as_string(require(obj, "format", path), path + ".format"));
  item.params.model = model_kind_from_string(
      as_string(require(obj, "model", path), path + ".model"));
  item.params.num_categories =
      as_int(require(obj, "num_categories", path), path + ".num_categories");
  item.params.a = as_double(require(obj, "a", path), path + ".a");
  item.params.b = as_double(require(obj, "b", path), path + ".b");
  if (obj.contains("c")) item.params.c = as_double(obj.at("c"), path + ".c");
  if (obj.contains("d")) {
    const json& d = obj.at("d");
    if (!d.is_array()) fail(path + ".d", "expected an array");
    for (std::size_t i = 0; i < d.size(); ++i)
      item.params.d.push_back(as_double(d[i], path + ".d[" + std::to_string(i) + "]"));
  }
  if (obj.contains("answer_key")) {
    std::string key = as_string(obj.at("answer_key"), path + ".answer_key");
    if (key.size() != 1 || !std::isalpha(static_cast<unsigned char>(key[0])))
      fail(path + ".answer_key", "expected a single option letter, got '" + key + "'");
    key[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
    item.answer_key = key;
  }
  if (obj.contains("num_options"))
    item.num_options = as_int(obj.at("num_options"), path + ".num_options");
  if (obj.contains("content_domain"))
    item.content_domain = as_string(obj.at("content_domain"), path + ".content_domain");
  if (obj.contains("cognitive_domain"))
    item.cognitive_domain = as_string(obj.at("cognitive_domain"), path + ".cognitive_domain");
  try {
    item.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return item;
}

ordered_json item_to_json(const BankItem& item) {
  ordered_json out;
  out["item_id"] = item.params.item_id;
  out["format"] = to_string(item.format);
  out["model"] = to_string(item.params.model);
  out["num_categories"] = item.params.num_categories;
  out["a"] = item.params.a;
  out["b"] = item.params.b;
  if (item.params.model == ModelKind::ThreePL) out["c"] = item.params.c;
  if (item.params.model == ModelKind::Gpc) out["d"] = item.params.d;
  if (item.answer_key) out["answer_key"] = *item.answer_key;
  if (item.num_options) out["num_options"] = *item.num_options;
  if (!item.content_domain.empty()) out["content_domain"] = item.content_domain;
  if (!item.cognitive_domain.empty()) out["cognitive_domain"] = item.cognitive_domain;
  return out;
}

BankCalibrationInfo parse_calibration(const json& obj, const ItemBank& bank,
                                      const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj,
                      {"method", "quadrature", "converged", "n_cycles",
                       "log_marginal_likelihood", "flagged_items", "standard_errors"},
                      path);
  BankCalibrationInfo info;
  info.method = as_string(require(obj, "method", path), path + ".method");
  const json& quad = require(obj, "quadrature", path);
  reject_unknown_keys(quad, {"kind", "nodes", "bound"}, path + ".quadrature");
  info.quadrature.num_nodes = as_int(require(quad, "nodes", path), path + ".quadrature.nodes");
  info.quadrature.bound = as_double(require(quad, "bound", path), path + ".quadrature.bound");
  info.converged = require(obj, "converged", path).get<bool>();
  info.n_cycles = as_int(require(obj, "n_cycles", path), path + ".n_cycles");
  info.log_marginal_likelihood = as_double(require(obj, "log_marginal_likelihood", path),
                                           path + ".log_marginal_likelihood");
  if (obj.contains("flagged_items"))
    info.flagged_items = obj.at("flagged_items").get<std::vector<std::string>>();
  const json& ses = require(obj, "standard_errors", path);
  if (!ses.is_object()) fail(path + ".standard_errors", "expected an object");
  info.standard_errors.resize(bank.items.size());
  for (auto it = ses.begin(); it != ses.end(); ++it) {
    int index = bank.index_of(it.key());
    if (index < 0) fail(path + ".standard_errors", "unknown item '" + it.key() + "'");
    const std::string se_path = path + ".standard_errors." + it.key();
    ItemStandardErrors se;
    se.a = nan_or_double(require(*it, "a", se_path), se_path + ".a");
    se.b = nan_or_double(require(*it, "b", se_path), se_path + ".b");
    if (it->contains("c")) se.c = nan_or_double(it->at("c"), se_path + ".c");
    if (it->contains("d")) {
      for (const auto& entry : it->at("d"))
        se.d.push_back(nan_or_double(entry, se_path + ".d"));
    }
    info.standard_errors[index] = std::move(se);
  }
  return info;
}

ordered_json calibration_to_json(const ItemBank& bank, const BankCalibrationInfo& info) {
  ordered_json out;
  out["method"] = info.method;
  out["quadrature"] = {{"kind", "normal_grid"},
                       {"nodes", info.quadrature.num_nodes},
                       {"bound", info.quadrature.bound}};
  out["converged"] = info.converged;
  out["n_cycles"] = info.n_cycles;
  out["log_marginal_likelihood"] = info.log_marginal_likelihood;
  out["flagged_items"] = info.flagged_items;
  ordered_json ses = ordered_json::object();
  for (std::size_t i = 0; i < bank.items.size(); ++i) {
    const ItemStandardErrors& se = info.standard_errors[i];
    ordered_json entry;
    entry["a"] = maybe_nan(se.a);
    entry["b"] = maybe_nan(se.b);
    if (bank.items[i].params.model == ModelKind::ThreePL) entry["c"] = maybe_nan(se.c);
    if (bank.items[i].params.model == ModelKind::Gpc) {
      ordered_json d = ordered_json::array();
      for (double v : se.d) d.push_back(maybe_nan(v));
      entry["d"] = std::move(d);
    }
    ses[bank.items[i].params.item_id] = std::move(entry);
  }
  out["standard_errors"] = std::move(ses);
  return out;
}

}  // namespace

const char* to_string(ItemFormat format) {
  switch (format) {
    case ItemFormat::MultipleChoice: return "multiple_choice";
    case ItemFormat::OpenDichotomous: return "open_dichotomous";
    case ItemFormat::OpenPartialCredit: return "open_partial_credit";
  }
  return "?";
}

ItemFormat item_format_from_string(const std::string& name) {
  if (name == "multiple_choice") return ItemFormat::MultipleChoice;
  if (name == "open_dichotomous") return ItemFormat::OpenDichotomous;
  if (name == "open_partial_credit") return ItemFormat::OpenPartialCredit;
  throw ValidationError("unknown item format '" + name + "'");
}

void BankItem::validate() const {
  params.validate();
  const std::string& id = params.item_id;
  switch (format) {
    case ItemFormat::MultipleChoice:
      if (params.model != ModelKind::ThreePL)
        throw ValidationError("item '" + id + "': multiple_choice items use the 3PL model");
      if (!answer_key)
        throw ValidationError("item '" + id + "': multiple_choice items require answer_key");
      break;
    case ItemFormat::OpenDichotomous:
      if (params.model != ModelKind::TwoPL)
        throw ValidationError("item '" + id + "': open_dichotomous items use the 2PL model");
      break;
    case ItemFormat::OpenPartialCredit:
      if (params.model != ModelKind::Gpc)
        throw ValidationError("item '" + id + "': open_partial_credit items use the GPC model");
      break;
  }
  if (answer_key && format != ItemFormat::MultipleChoice)
    throw ValidationError("item '" + id + "': answer_key only applies to multiple choice");
  if (num_options) {
    if (format != ItemFormat::MultipleChoice)
      throw ValidationError("item '" + id + "': num_options only applies to multiple choice");
    if (*num_options < 2 || *num_options > 26)
      throw ValidationError("item '" + id + "': num_options must be in [2, 26]");
    if (answer_key && (*answer_key)[0] - 'A' >= *num_options)
      throw ValidationError("item '" + id + "': answer_key beyond num_options");
  }
}

void ItemBank::validate() const {
  if (items.empty()) throw ValidationError("item bank has no items");
  for (const BankItem& item : items) item.validate();
  std::unordered_map<std::string, int> seen;
  for (const BankItem& item : items)
    if (!seen.emplace(item.params.item_id, 1).second)
      throw ValidationError("duplicate item_id '" + item.params.item_id + "'");
  if (scale) scale->validate();
  if (calibration && calibration->standard_errors.size() != items.size())
    throw ValidationError("calibration standard_errors not aligned with items");
}

ItemSet ItemBank::to_item_set() const {
  std::vector<ItemParameters> params;
  params.reserve(items.size());
  for (const BankItem& item : items) params.push_back(item.params);
  return ItemSet(std::move(params));
}

int ItemBank::index_of(const std::string& item_id) const {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].params.item_id == item_id) return static_cast<int>(i);
  return -1;
}

std::size_t ItemBank::count_by_format(ItemFormat format) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(),
                    [format](const BankItem& item) { return item.format == format; }));
}

ItemBank ItemBank::parse_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("item bank is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("item bank: expected a JSON object");
  reject_unknown_keys(doc, {"schema", "name", "scale", "notes", "calibration", "items"},
                      "item bank");
  if (doc.contains("schema")) {
    std::string schema = as_string(doc.at("schema"), "item bank.schema");
    if (schema != "psychbench.item_bank.v1")
      fail("item bank.schema", "unsupported schema '" + schema + "'");
  }
  ItemBank bank;
  bank.name = as_string(require(doc, "name", "item bank"), "item bank.name");
  if (doc.contains("scale")) bank.scale = parse_scale(doc.at("scale"), "item bank.scale");
  if (doc.contains("notes")) bank.notes = as_string(doc.at("notes"), "item bank.notes");
  const json& items = require(doc, "items", "item bank");
  if (!items.is_array()) fail("item bank.items", "expected an array");
  for (std::size_t i = 0; i < items.size(); ++i)
    bank.items.push_back(parse_item(items[i], "items[" + std::to_string(i) + "]"));
  if (doc.contains("calibration"))
    bank.calibration = parse_calibration(doc.at("calibration"), bank, "calibration");
  bank.validate();
  return bank;
}

ItemBank ItemBank::load_file(const std::string& path) {
  return parse_json_text(csv::read_file(path));
}

std::string ItemBank::to_json_text() const {
  validate();
  ordered_json doc;
  doc["schema"] = "psychbench.item_bank.v1";
  doc["name"] = name;
  if (scale) doc["scale"] = scale_to_json(*scale);
  if (!notes.empty()) doc["notes"] = notes;
  if (calibration) doc["calibration"] = calibration_to_json(*this, *calibration);
  ordered_json items_json = ordered_json::array();
  for (const BankItem& item : items) items_json.push_back(item_to_json(item));
  doc["items"] = std::move(items_json);
  return doc.dump(2) + "\n";
}

void ItemBank::save_file(const std::string& path) const {
  csv::write_file(path, to_json_text());
}

ItemBank calibrated_bank(const ItemBank& bank_template, const CalibrationResult& result) {
  if (result.items.size() != bank_template.items.size())
    throw ContractError("calibration result does not cover the template bank");
  ItemBank bank = bank_template;
  BankCalibrationInfo info;
  info.quadrature = result.quadrature;
  info.converged = result.converged;
  info.n_cycles = result.n_cycles;
  info.log_marginal_likelihood = result.log_marginal_likelihood;
  info.flagged_items = result.flagged_items;
  info.standard_errors.resize(bank.items.size());
  for (std::size_t i = 0; i < bank.items.size(); ++i) {
    const std::string& id = bank.items[i].params.item_id;
    int index = result.items.index_of(id);
    if (index < 0)
      throw ContractError("calibration result is missing item '" + id + "'");
    const ItemParameters& fitted = result.items.item(index);
    if (fitted.model != bank.items[i].params.model)
      throw ContractError("calibration result changed the model of item '" + id + "'");
    bank.items[i].params = fitted;
    info.standard_errors[i] = result.standard_errors[index];
  }
  bank.calibration = std::move(info);
  bank.validate();
  return bank;
}

}  // namespace psychbench
