// Copyright 2026 The GeMuCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gemuco/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gemuco {

int Dataset::sample_count() const {
  int n = 0;
  for (const Episode& e : episodes) n += static_cast<int>(e.samples.size());
  return n;
}

void Dataset::validate(const ModalityLayout& layout) const {
  if (episodes.empty()) {
    throw std::invalid_argument("Dataset: at least one episode required");
  }
  for (const Episode& e : episodes) {
    if (e.samples.empty()) {
      throw std::invalid_argument("Dataset: episode '" + e.state_id +
                                  "' is empty");
    }
    for (const Sample& s : e.samples) {
      if (s.state_id != e.state_id) {
        throw std::invalid_argument("Dataset: sample state_id mismatch in '" +
                                    e.state_id + "'");
      }
      if (s.values.size() != layout.total_dim() ||
          static_cast<int>(s.available.size()) != layout.group_count()) {
        throw std::invalid_argument("Dataset: sample shape mismatch");
      }
      for (int g = 0; g < layout.group_count(); ++g) {
        if (s.group_available(g) && !layout.segment(s.values, g).allFinite()) {
          throw std::invalid_argument(
              "Dataset: non-finite value in available group '" +
              layout.name(g) + "'");
        }
      }
    }
  }
}

Normalizer fit_normalizer(const Dataset& data, const ModalityLayout& layout) {
  if (data.episodes.empty()) {
    throw std::invalid_argument("fit_normalizer: empty dataset");
  }
  const int dim = layout.total_dim();
  Vector sum = Vector::Zero(dim);
  Vector sumsq = Vector::Zero(dim);
  std::vector<long> count(dim, 0);
  for (const Episode& e : data.episodes) {
    for (const Sample& s : e.samples) {
      for (int g = 0; g < layout.group_count(); ++g) {
        if (!s.group_available(g)) continue;
        for (int c = 0; c < layout.dim(g); ++c) {
          const int ch = layout.offset(g) + c;
          const double v = s.values[ch];
          sum[ch] += v;
          sumsq[ch] += v * v;
          ++count[ch];
        }
      }
    }
  }
  Vector mean(dim), stddev(dim);
  for (int ch = 0; ch < dim; ++ch) {
    if (count[ch] == 0) {
      // Locate the owning group for the error message.
      for (int g = 0; g < layout.group_count(); ++g) {
        if (ch >= layout.offset(g) && ch < layout.offset(g) + layout.dim(g)) {
          throw std::runtime_error("fit_normalizer: channel '" +
                                   layout.name(g) + "[" +
                                   std::to_string(ch - layout.offset(g)) +
                                   "]' never observed");
        }
      }
    }
    mean[ch] = sum[ch] / static_cast<double>(count[ch]);
    const double var =
        std::max(0.0, sumsq[ch] / static_cast<double>(count[ch]) -
                          mean[ch] * mean[ch]);
    stddev[ch] = std::sqrt(var);
  }
  return Normalizer(std::move(mean), std::move(stddev));
}

void write_dataset_csv(const Dataset& data, const ModalityLayout& layout,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  out << "state_id";
  for (int g = 0; g < layout.group_count(); ++g) {
    out << ",avail_" << layout.name(g);
  }
  for (int g = 0; g < layout.group_count(); ++g) {
    for (int c = 0; c < layout.dim(g); ++c) {
      out << "," << layout.name(g) << "_" << c;
    }
  }
  out << "\n";
  out.precision(17);
  for (const Episode& e : data.episodes) {
    for (const Sample& s : e.samples) {
      out << s.state_id;
      for (int g = 0; g < layout.group_count(); ++g) {
        out << "," << (s.group_available(g) ? 1 : 0);
      }
      for (int ch = 0; ch < layout.total_dim(); ++ch) {
        out << "," << s.values[ch];
      }
      out << "\n";
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path,
                         const ModalityLayout& layout) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_dataset_csv: empty file " + path);
  }
  // Validate the header against the layout.
  {
    std::vector<std::string> expect = {"state_id"};
    for (int g = 0; g < layout.group_count(); ++g) {
      expect.push_back("avail_" + layout.name(g));
    }
    for (int g = 0; g < layout.group_count(); ++g) {
      for (int c = 0; c < layout.dim(g); ++c) {
        expect.push_back(layout.name(g) + "_" + std::to_string(c));
      }
    }
    const auto got = split_csv_line(line);
    if (got != expect) {
      throw std::runtime_error("read_dataset_csv: header does not match layout in " +
                               path);
    }
  }
  const int ncols = 1 + layout.group_count() + layout.total_dim();
  Dataset data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != ncols) {
      throw std::runtime_error("read_dataset_csv: line " +
                               std::to_string(lineno) + ": expected " +
                               std::to_string(ncols) + " fields, got " +
                               std::to_string(fields.size()));
    }
    Sample s;
    s.state_id = fields[0];
    s.available.resize(layout.group_count());
    for (int g = 0; g < layout.group_count(); ++g) {
      s.available[g] = (fields[1 + g] == "1") ? 1 : 0;
    }
    s.values.resize(layout.total_dim());
    for (int ch = 0; ch < layout.total_dim(); ++ch) {
      try {
        s.values[ch] = std::stod(fields[1 + layout.group_count() + ch]);
      } catch (...) {
        throw std::runtime_error("read_dataset_csv: line " +
                                 std::to_string(lineno) +
                                 ": bad numeric field");
      }
    }
    if (data.episodes.empty() || data.episodes.back().state_id != s.state_id) {
      // Append to an existing episode when the id reappears out of order.
      Episode* found = nullptr;
      for (Episode& e : data.episodes) {
        if (e.state_id == s.state_id) {
          found = &e;
          break;
        }
      }
      if (!found) {
        data.episodes.push_back(Episode{s.state_id, {}});
        found = &data.episodes.back();
      }
      found->samples.push_back(std::move(s));
    } else {
      data.episodes.back().samples.push_back(std::move(s));
    }
  }
  if (data.episodes.empty()) {
    throw std::runtime_error("read_dataset_csv: no samples in " + path);
  }
  return data;
}

void split_dataset(const Dataset& data, double eval_fraction, Dataset* train,
                   Dataset* eval) {
  if (eval_fraction <= 0.0 || eval_fraction >= 1.0) {
    throw std::invalid_argument("split_dataset: eval_fraction out of (0,1)");
  }
  train->episodes.clear();
  eval->episodes.clear();
  for (const Episode& e : data.episodes) {
    const int n = static_cast<int>(e.samples.size());
    int n_eval = static_cast<int>(std::floor(n * eval_fraction));
    if (n_eval >= n) n_eval = n - 1;
    Episode tr{e.state_id, {}};
    Episode ev{e.state_id, {}};
    tr.samples.assign(e.samples.begin(), e.samples.end() - n_eval);
    ev.samples.assign(e.samples.end() - n_eval, e.samples.end());
    train->episodes.push_back(std::move(tr));
    if (!ev.samples.empty()) eval->episodes.push_back(std::move(ev));
  }
}

}  // namespace gemuco
