#include "recbase/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "recbase/errors.hpp"

namespace recbase {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool blank(std::string_view line) { return trim(line).empty(); }

double parse_real(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(source, line, "expected a number, got '" + std::string(field) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(source, line, "expected an integer, got '" + std::string(field) + "'");
  }
  return v;
}

std::string_view field_at(const std::vector<std::string_view>& fields, std::size_t column, const std::string& source,
                          std::size_t line) {
  if (column >= fields.size()) {
    throw ParseError(source, line,
                     "expected at least " + std::to_string(column + 1) + " fields, found " + std::to_string(fields.size()));
  }
  const auto f = trim(fields[column]);
  if (f.empty()) throw ParseError(source, line, "empty field in column " + std::to_string(column));
  return f;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path.string());
  return in;
}

std::size_t distinct_pairs(const std::vector<Rating>& ratings, std::size_t begin, std::size_t end) {
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t k = begin; k < end; ++k) {
    seen.insert((static_cast<std::uint64_t>(ratings[k].user) << 32) | ratings[k].item);
  }
  return seen.size();
}

RatingTriples slice(const RatingTriples& all, std::size_t begin, std::size_t end) {
  RatingTriples t;
  t.ratings.assign(all.ratings.begin() + static_cast<std::ptrdiff_t>(begin),
                   all.ratings.begin() + static_cast<std::ptrdiff_t>(end));
  t.users = all.users;
  t.items = all.items;
  return t;
}

/// Reads "(user,item)<TAB>neg<TAB>neg..." lines; negatives are keyed by user.
NegativeSampleSet read_negative_file(std::istream& in, const std::string& source, RatingTriples& ids) {
  NegativeSampleSet set;
  std::vector<std::vector<Index>> by_user;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || trim(line).front() == '#') continue;
    const auto fields = split_fields(line, "\t");
    const auto key = trim(fields.front());
    if (key.size() < 5 || key.front() != '(' || key.back() != ')' || key.find(',') == std::string_view::npos) {
      throw ParseError(source, line_no, "expected '(user,item)' in the first field");
    }
    const auto inner = key.substr(1, key.size() - 2);
    const auto user_id = trim(inner.substr(0, inner.find(',')));
    const auto u = ids.users.find(user_id);
    if (!u) throw ParseError(source, line_no, "unknown user '" + std::string(user_id) + "'");
    if (by_user.size() <= *u) by_user.resize(*u + 1);
    std::size_t count = 0;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto id = trim(fields[k]);
      if (id.empty()) continue;
      by_user[*u].push_back(ids.items.intern(id));
      ++count;
    }
    if (first) {
      set.per_positive = count;
      first = false;
    }
  }
  for (auto& list : by_user) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  set.negatives = std::move(by_user);
  return set;
}

SplitSpec infer_split_spec(const SplitPair& s) {
  SplitSpec spec;
  bool single = true;
  for (Index u = 0; u < s.test.n_rows(); ++u) single = single && s.test.row_size(u) <= 1;
  if (single) {
    spec.method = SplitMethod::leave_one_out;
    spec.mode = LeaveOneOutMode::random_one;
  } else {
    spec.method = SplitMethod::holdout;
    spec.exact_count = true;
    spec.ratio = static_cast<double>(s.train.nnz()) / static_cast<double>(s.train.nnz() + s.test.nnz());
  }
  return spec;
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delimiter) {
  std::vector<std::string_view> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delimiter.size();
  }
}

void read_triples(std::istream& in, const std::string& source, std::string_view delimiter, bool header,
                  const ColumnMap& columns, RatingTriples& out, ParseStats* stats) {
  std::string line;
  std::size_t line_no = 0;
  bool skip_header = header;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || trim(line).front() == '#') continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    const auto fields = split_fields(line, delimiter);
    const auto user = field_at(fields, columns.user, source, line_no);
    const auto item = field_at(fields, columns.item, source, line_no);
    double value = 1.0;
    if (columns.rating) {
      value = parse_real(field_at(fields, *columns.rating, source, line_no), source, line_no);
      if (!std::isfinite(value) || value < 0.0) {
        throw ParseError(source, line_no, "rating must be finite and non-negative");
      }
    }
    std::optional<std::int64_t> ts;
    if (columns.timestamp) ts = parse_int(field_at(fields, *columns.timestamp, source, line_no), source, line_no);
    out.add(user, item, value, ts);
    if (stats != nullptr) ++stats->rows_read;
  }
}

FeatureMatrix read_features(std::istream& in, const std::string& source, const FeatureFileSpec& spec,
                            const IdMap& items, IdMap& features) {
  struct Entry {
    Index item;
    Index feature;
    double weight;
  };
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  bool skip_header = spec.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    const auto fields = split_fields(line, spec.delimiter);
    const auto item = field_at(fields, spec.item_column, source, line_no);
    const auto feature = field_at(fields, spec.feature_column, source, line_no);
    double w = 1.0;
    if (spec.weight_column) w = parse_real(field_at(fields, *spec.weight_column, source, line_no), source, line_no);
    const auto i = items.find(item);
    if (!i) continue;
    entries.push_back({*i, features.intern(feature), w});
  }
  // Repeated (item, feature) rows keep the last weight.
  std::vector<Triplet> triplets;
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.item != b.item ? a.item < b.item : a.feature < b.feature;
  });
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k + 1 < entries.size() && entries[k + 1].item == entries[k].item &&
        entries[k + 1].feature == entries[k].feature) {
      continue;
    }
    if (entries[k].weight != 0.0) triplets.push_back({entries[k].item, entries[k].feature, entries[k].weight});
  }
  return SparseMatrix::from_triplets(items.size(), features.size(), std::move(triplets));
}

LoadedDataset load_dataset(const ExperimentConfig& cfg) {
  const auto& spec = cfg.dataset;
  LoadedDataset out;
  RatingTriples all;
  if (spec.split_import) {
    const auto& imp = *spec.split_import;
    {
      auto in = open_input(cfg.resolve(imp.train));
      read_triples(in, imp.train, spec.delimiter, spec.header, spec.columns, all, &out.stats);
    }
    const std::size_t n_train = all.ratings.size();
    {
      auto in = open_input(cfg.resolve(imp.test));
      read_triples(in, imp.test, spec.delimiter, spec.header, spec.columns, all, &out.stats);
    }
    if (imp.negatives) {
      auto in = open_input(cfg.resolve(*imp.negatives));
      out.imported_negatives = read_negative_file(in, *imp.negatives, all);
      out.imported_negatives->negatives.resize(all.users.size());
    }
    const std::size_t n_all = all.ratings.size();
    out.stats.duplicates = (n_train - distinct_pairs(all.ratings, 0, n_train)) +
                           (n_all - n_train - distinct_pairs(all.ratings, n_train, n_all));
    const auto train_t = slice(all, 0, n_train);
    const auto test_t = slice(all, n_train, n_all);
    SplitPair split;
    split.train = build_interaction_matrix(train_t, spec.binarize_threshold, spec.duplicates);
    split.test = build_interaction_matrix(test_t, spec.binarize_threshold, spec.duplicates);
    split.spec = infer_split_spec(split);
    out.stats.rows_dropped = distinct_pairs(all.ratings, 0, n_train) + distinct_pairs(all.ratings, n_train, n_all) -
                             split.train.nnz() - split.test.nnz();
    out.urm = std::make_shared<const InteractionMatrix>(merge_disjoint(split.train, split.test));
    out.imported_split = std::move(split);
  } else {
    auto in = open_input(cfg.resolve(spec.path));
    read_triples(in, spec.path, spec.delimiter, spec.header, spec.columns, all, &out.stats);
    const auto distinct = distinct_pairs(all.ratings, 0, all.ratings.size());
    out.stats.duplicates = all.ratings.size() - distinct;
    auto m = build_interaction_matrix(all, spec.binarize_threshold, spec.duplicates);
    out.stats.rows_dropped = distinct - m.nnz();
    out.urm = std::make_shared<const InteractionMatrix>(std::move(m));
  }
  out.users = all.users;
  out.items = all.items;
  out.stats.users = out.users.size();
  out.stats.items = out.items.size();
  out.stats.interactions = out.urm->nnz();

  if (spec.features) {
    auto in = open_input(cfg.resolve(spec.features->path));
    IdMap features;
    out.icm = read_features(in, spec.features->path, *spec.features, out.items, features);
  }
  return out;
}

TriplePair read_split_files(const std::string& train_path, const std::string& test_path, std::string_view delimiter,
                            const ColumnMap& columns) {
  RatingTriples all;
  {
    auto in = open_input(train_path);
    read_triples(in, train_path, delimiter, false, columns, all);
  }
  const auto n_train = all.ratings.size();
  {
    auto in = open_input(test_path);
    read_triples(in, test_path, delimiter, false, columns, all);
  }
  TriplePair p;
  p.split.train = build_interaction_matrix(slice(all, 0, n_train));
  p.split.test = build_interaction_matrix(slice(all, n_train, all.ratings.size()));
  p.split.spec = infer_split_spec(p.split);
  p.users = std::move(all.users);
  p.items = std::move(all.items);
  return p;
}

void write_triples(std::ostream& out, const InteractionMatrix& m, const IdMap& users, const IdMap& items,
                   std::string_view delimiter) {
  char buf[32];
  for (Index u = 0; u < m.n_rows(); ++u) {
    const auto cols = m.row_indices(u);
    const auto vals = m.row_values(u);
    const auto times = m.row_timestamps(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, vals[k]);
      out << users.id(u) << delimiter << items.id(cols[k]) << delimiter << std::string_view(buf, ptr - buf);
      if (!times.empty()) out << delimiter << times[k];
      out << '\n';
    }
  }
}

void write_negatives(std::ostream& out, const InteractionMatrix& test, const NegativeSampleSet& negatives,
                     const IdMap& users, const IdMap& items) {
  for (Index u = 0; u < test.n_rows(); ++u) {
    const auto positives = test.row_indices(u);
    if (positives.empty() || u >= negatives.negatives.size()) continue;
    const auto& negs = negatives.negatives[u];
    const std::size_t per = positives.size() > 0 ? (negs.size() + positives.size() - 1) / positives.size() : 0;
    for (std::size_t p = 0; p < positives.size(); ++p) {
      out << '(' << users.id(u) << ',' << items.id(positives[p]) << ')';
      for (std::size_t k = p * per; k < std::min(negs.size(), (p + 1) * per); ++k) out << '\t' << items.id(negs[k]);
      out << '\n';
    }
  }
}

}  // namespace recbase
