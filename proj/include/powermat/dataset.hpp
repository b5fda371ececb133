#ifndef POWERMAT_DATASET_HPP
#define POWERMAT_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "powermat/errors.hpp"
#include "powermat/rng.hpp"
#include "powermat/types.hpp"

namespace powermat {

// One observed (user, item, rating, context) row. Context attributes are
// raw integer codes straight from the source file; -1 means unknown.
struct RatingEvent {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::vector<int> context_attrs;
};

enum class ContextScheme { one_hot, normalized_ordinal };

inline const char* to_string(ContextScheme s) {
  return s == ContextScheme::one_hot ? "one_hot" : "normalized_ordinal";
}

inline ContextScheme context_scheme_from_string(const std::string& s) {
  if (s == "one_hot") return ContextScheme::one_hot;
  if (s == "normalized_ordinal") return ContextScheme::normalized_ordinal;
  throw validation_error("unknown context scheme '" + s + "'");
}

// Maps raw per-column codes to a fixed-length real vector. one_hot keys every
// code seen at fit time (including -1) to its own slot; normalized_ordinal
// rescales codes into [0, 1] per column and sends -1 to 0.5.
class ContextEncoder {
 public:
  ContextScheme scheme = ContextScheme::one_hot;
  std::vector<std::string> column_names;
  std::vector<std::vector<int>> categories;  // per column, sorted; one_hot only
  std::vector<double> col_min, col_max;      // per column; normalized_ordinal only
  std::vector<std::size_t> offsets;          // per-column start slot; one_hot only
  std::size_t dim = 0;

  static ContextEncoder fit(const std::vector<RatingEvent>& events,
                            std::vector<std::string> names, ContextScheme scheme) {
    ContextEncoder enc;
    enc.scheme = scheme;
    enc.column_names = std::move(names);
    const std::size_t cols = enc.column_names.size();
    for (const auto& ev : events)
      if (ev.context_attrs.size() != cols)
        throw dimension_error("context width " + std::to_string(ev.context_attrs.size()) +
                              " does not match the " + std::to_string(cols) +
                              " configured columns");

    if (scheme == ContextScheme::one_hot) {
      enc.categories.resize(cols);
      for (std::size_t c = 0; c < cols; ++c) {
        std::vector<int> seen;
        for (const auto& ev : events) seen.push_back(ev.context_attrs[c]);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        enc.categories[c] = std::move(seen);
      }
      enc.offsets.resize(cols);
      for (std::size_t c = 0; c < cols; ++c) {
        enc.offsets[c] = enc.dim;
        enc.dim += enc.categories[c].size();
      }
    } else {
      enc.col_min.assign(cols, 0.0);
      enc.col_max.assign(cols, 0.0);
      for (std::size_t c = 0; c < cols; ++c) {
        bool any = false;
        for (const auto& ev : events) {
          const int v = ev.context_attrs[c];
          if (v == -1) continue;
          if (!any || v < enc.col_min[c]) enc.col_min[c] = v;
          if (!any || v > enc.col_max[c]) enc.col_max[c] = v;
          any = true;
        }
      }
      enc.dim = cols;
    }
    return enc;
  }

  ContextVector encode(const RatingEvent& ev) const {
    const std::size_t cols = column_names.size();
    if (ev.context_attrs.size() != cols)
      throw dimension_error("event has " + std::to_string(ev.context_attrs.size()) +
                            " context attributes, encoder expects " + std::to_string(cols));
    ContextVector out(dim, 0.0);
    if (scheme == ContextScheme::one_hot) {
      for (std::size_t c = 0; c < cols; ++c) {
        const int code = ev.context_attrs[c];
        const auto& cat = categories[c];
        const auto it = std::lower_bound(cat.begin(), cat.end(), code);
        if (it == cat.end() || *it != code)
          throw encoding_error("unseen context code " + std::to_string(code) +
                               " in column '" + column_names[c] + "'");
        out[offsets[c] + static_cast<std::size_t>(it - cat.begin())] = 1.0;
      }
    } else {
      for (std::size_t c = 0; c < cols; ++c) {
        const int code = ev.context_attrs[c];
        if (code == -1 || col_max[c] <= col_min[c])
          out[c] = 0.5;
        else
          out[c] = (code - col_min[c]) / (col_max[c] - col_min[c]);
      }
    }
    return out;
  }
};

// Immutable event collection with dense user/item index maps and a fitted
// encoder. Splits share their parent's maps, so a child's maps may cover
// ids that only appear on the other side.
struct Dataset {
  std::vector<RatingEvent> events;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  std::vector<std::string> user_ids;  // dense index -> id
  std::vector<std::string> item_ids;
  ContextEncoder encoder;
  double rating_min = 1.0;
  double r_max = 5.0;

  std::size_t n_events() const { return events.size(); }
  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }
};

// Builds maps in first-appearance order and fits the encoder. Validates
// every rating against [rating_min, r_max].
inline Dataset make_dataset(std::vector<RatingEvent> events,
                            std::vector<std::string> context_names,
                            ContextScheme scheme = ContextScheme::one_hot,
                            double rating_min = 1.0, double r_max = 5.0) {
  if (events.empty()) throw data_error("dataset has no events");
  if (!(rating_min < r_max))
    throw validation_error("rating_min must be below r_max");
  Dataset d;
  d.rating_min = rating_min;
  d.r_max = r_max;
  for (const auto& ev : events) {
    if (!(ev.rating >= rating_min && ev.rating <= r_max))
      throw validation_error("rating " + std::to_string(ev.rating) + " for user '" +
                             ev.user_id + "' outside [" + std::to_string(rating_min) +
                             ", " + std::to_string(r_max) + "]");
    if (d.user_index.emplace(ev.user_id, static_cast<int>(d.user_ids.size())).second)
      d.user_ids.push_back(ev.user_id);
    if (d.item_index.emplace(ev.item_id, static_cast<int>(d.item_ids.size())).second)
      d.item_ids.push_back(ev.item_id);
  }
  d.encoder = ContextEncoder::fit(events, std::move(context_names), scheme);
  d.events = std::move(events);
  return d;
}

// Column selection for the source CSV, by header name. Defaults follow the
// LDOS-CoMoDa layout: 12 contextual variables next to userID/itemID/rating.
struct ColumnMapping {
  std::string user_col = "userID";
  std::string item_col = "itemID";
  std::string rating_col = "rating";
  std::vector<std::string> context_cols = {
      "time",   "daytype",     "season", "location", "weather",  "social",
      "endEmo", "dominantEmo", "mood",   "physical", "decision", "interaction"};
  double rating_min = 1.0;
  double r_max = 5.0;
  ContextScheme scheme = ContextScheme::one_hot;
};

struct ParseResult {
  Dataset dataset;
  std::vector<std::string> diagnostics;  // one line per skipped row
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_skipped = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc{} && r.ptr == e && !s.empty();
}

inline bool parse_int(const std::string& s, int& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc{} && r.ptr == e && !s.empty();
}

}  // namespace detail

// Loads a comma-delimited file with one header row. Malformed rows are
// skipped with a line-numbered diagnostic, never aborting the parse;
// -1 context codes pass through as "unknown".
inline ParseResult parse_comoda(const std::string& path, const ColumnMapping& mapping = {}) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
  const auto header = detail::split_csv_line(line);

  const auto col_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw data_error("column '" + name + "' not found in '" + path + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t user_c = col_of(mapping.user_col);
  const std::size_t item_c = col_of(mapping.item_col);
  const std::size_t rating_c = col_of(mapping.rating_col);
  std::vector<std::size_t> ctx_c;
  for (const auto& name : mapping.context_cols) ctx_c.push_back(col_of(name));

  ParseResult res;
  std::vector<RatingEvent> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++res.rows_total;
    const auto fields = detail::split_csv_line(line);

    const auto skip = [&](const std::string& why) {
      res.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
      ++res.rows_skipped;
    };

    if (fields.size() != header.size()) {
      skip("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    RatingEvent ev;
    ev.user_id = fields[user_c];
    ev.item_id = fields[item_c];
    if (ev.user_id.empty() || ev.item_id.empty()) {
      skip("missing user or item id");
      continue;
    }
    if (!detail::parse_double(fields[rating_c], ev.rating)) {
      skip("unparseable rating '" + fields[rating_c] + "'");
      continue;
    }
    if (!(ev.rating >= mapping.rating_min && ev.rating <= mapping.r_max)) {
      skip("rating " + fields[rating_c] + " outside [" + std::to_string(mapping.rating_min) +
           ", " + std::to_string(mapping.r_max) + "]");
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < ctx_c.size(); ++i) {
      int code = 0;
      if (!detail::parse_int(fields[ctx_c[i]], code)) {
        skip("unparseable context '" + fields[ctx_c[i]] + "' in column '" +
             mapping.context_cols[i] + "'");
        ok = false;
        break;
      }
      ev.context_attrs.push_back(code);
    }
    if (!ok) continue;
    events.push_back(std::move(ev));
    ++res.rows_kept;
  }

  if (events.empty()) throw data_error("'" + path + "' has no valid rows");
  res.dataset = make_dataset(std::move(events), mapping.context_cols, mapping.scheme,
                             mapping.rating_min, mapping.r_max);
  return res;
}

// Seeded random per-event holdout. Both sides keep the parent's index maps
// and encoder and preserve the parent's event order.
inline std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction,
                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw config_error("test_fraction must be in (0, 1)");
  const std::size_t n = d.n_events();
  const auto n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test == n)
    throw config_error("split of " + std::to_string(n) + " events at fraction " +
                       std::to_string(test_fraction) + " leaves one side empty");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 g(seed);
  rng::shuffle(order, g);
  std::vector<char> in_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = 1;

  Dataset train = d, test = d;
  train.events.clear();
  test.events.clear();
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? test : train).events.push_back(d.events[i]);
  return {std::move(train), std::move(test)};
}

// Deterministic synthetic corpus: item popularity ~ Zipf(zipf_exponent),
// users uniform, integer ratings uniform on the scale, context codes uniform
// per column starting at 1. Enables every test to run without the real data.
inline Dataset synth_generate(std::size_t n_users, std::size_t n_items, std::size_t n_events,
                              double zipf_exponent, const std::vector<int>& context_columns,
                              std::uint64_t seed, double rating_min = 1.0, double r_max = 5.0,
                              ContextScheme scheme = ContextScheme::one_hot) {
  if (n_users == 0 || n_items == 0 || n_events == 0)
    throw validation_error("synth_generate: sizes must be positive");
  if (!(zipf_exponent > 0.0))
    throw validation_error("synth_generate: zipf_exponent must be > 0");
  for (const int cats : context_columns)
    if (cats < 1) throw validation_error("synth_generate: category counts must be >= 1");
  const auto rating_lo = static_cast<long>(std::ceil(rating_min));
  const auto rating_hi = static_cast<long>(std::floor(r_max));
  if (rating_lo > rating_hi)
    throw validation_error("synth_generate: no integer ratings in [rating_min, r_max]");

  std::vector<double> cumulative(n_items);
  double total = 0.0;
  for (std::size_t i = 0; i < n_items; ++i) {
    total += std::pow(static_cast<double>(i + 1), -zipf_exponent);
    cumulative[i] = total;
  }

  std::mt19937_64 g(seed);
  std::vector<RatingEvent> events;
  events.reserve(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    const double target = rng::u01(g) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const auto item = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(n_items) - 1));
    RatingEvent ev;
    ev.user_id = "u" + std::to_string(rng::below(g, n_users));
    ev.item_id = "i" + std::to_string(item);
    ev.rating = static_cast<double>(
        rating_lo + static_cast<long>(rng::below(g, static_cast<std::uint64_t>(
                                                        rating_hi - rating_lo + 1))));
    for (const int cats : context_columns)
      ev.context_attrs.push_back(1 + static_cast<int>(rng::below(g, static_cast<std::uint64_t>(cats))));
    events.push_back(std::move(ev));
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < context_columns.size(); ++c)
    names.push_back("ctx" + std::to_string(c + 1));
  return make_dataset(std::move(events), std::move(names), scheme, rating_min, r_max);
}

}  // namespace powermat

#endif
