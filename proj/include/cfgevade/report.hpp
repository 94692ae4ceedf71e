#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgevade/attack.hpp"
#include "cfgevade/error.hpp"

namespace cfgevade {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> read_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

inline std::string count(double v) {
  char buf[32];
  if (v == std::floor(v)) std::snprintf(buf, sizeof buf, "%.0f", v);
  else std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline Json to_json(const TrialStats& t) {
  return {{"a_a", t.a_a},
          {"a_i", t.a_i},
          {"a_s", t.a_s},
          {"skipped_benign", t.skipped_benign},
          {"s_g", t.s_g},
          {"s_n", detail::optional_number(t.s_n)}};
}

inline Json to_json(const CampaignStats& c) {
  Json trials = Json::array();
  for (const auto& t : c.trials) trials.push_back(to_json(t));
  return {{"rounds", c.rounds},
          {"trials", trials},
          {"summary",
           {{"mean_s_g", c.mean_s_g},
            {"median_s_g", c.median_s_g},
            {"mean_a_i", c.mean_a_i},
            {"median_a_i", c.median_a_i},
            {"mean_s_n", detail::optional_number(c.mean_s_n)},
            {"median_s_n", detail::optional_number(c.median_s_n)}}}};
}

// Summaries are recomputed from the raw counters, never trusted from the file.
inline CampaignStats campaign_from_json(const Json& j) {
  try {
    std::vector<TrialStats> trials;
    for (const auto& t : j.at("trials")) {
      trials.push_back(TrialStats::from_counts(t.at("a_a").get<std::size_t>(), t.at("a_i").get<std::size_t>(),
                                               t.at("a_s").get<std::size_t>(),
                                               t.value("skipped_benign", std::size_t{0})));
    }
    return CampaignStats::aggregate(j.at("rounds").get<std::size_t>(), std::move(trials));
  } catch (const Json::exception& e) {
    throw SchemaViolation(std::string("campaign report: ") + e.what());
  }
}

inline Json report_json(const std::vector<CampaignStats>& campaigns) {
  Json arr = Json::array();
  for (const auto& c : campaigns) arr.push_back(to_json(c));
  return {{"campaigns", arr}};
}

inline std::vector<CampaignStats> campaigns_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("campaigns") || !j.at("campaigns").is_array()) {
    throw SchemaViolation("campaign report: expected an object with a 'campaigns' array");
  }
  std::vector<CampaignStats> out;
  for (const auto& c : j.at("campaigns")) out.push_back(campaign_from_json(c));
  return out;
}

// Aligned table, one row per campaign: rounds, mean/median s_g, mean/median
// a_i, mean/median s_n.
inline std::string render_table(const std::vector<CampaignStats>& campaigns) {
  std::vector<std::vector<std::string>> rows{
      {"Rounds", "s_g mean", "s_g median", "a_i mean", "a_i median", "s_n mean", "s_n median"}};
  for (const auto& c : campaigns) {
    rows.push_back({std::to_string(c.rounds), detail::percent(c.mean_s_g), detail::percent(c.median_s_g),
                    detail::count(c.mean_a_i), detail::count(c.median_a_i), detail::percent(c.mean_s_n),
                    detail::percent(c.median_s_n)});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], r[k].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (k) out += "  ";
      out += std::string(width[k] - rows[i][k].size(), ' ') + rows[i][k];
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 2 * (width.size() - 1);
      for (const auto w : width) total += w;
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

inline Json to_json(const AttackOutcome& o, std::size_t trial) {
  Json rounds = Json::array();
  for (const auto& round : o.replacements) {
    Json r = Json::array();
    for (const auto& rep : round) {
      r.push_back({{"original", rep.original}, {"replacement", rep.replacement}, {"attribution", rep.attribution}});
    }
    rounds.push_back(r);
  }
  return {{"trial", trial},
          {"sample", o.sample},
          {"status", to_string(o.status)},
          {"rounds_used", o.rounds_used},
          {"final_p_malicious", o.final_p_malicious},
          {"replacements", rounds},
          {"final_calls", o.history.back()}};
}

}  // namespace cfgevade
