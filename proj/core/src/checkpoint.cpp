// Copyright 2026 The cpt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cpt/errors.hpp"
#include "json.hpp"

namespace cpt::checkpoint {
namespace {

using json = nlohmann::json;
using model::Matrix;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host byte order");

constexpr std::string_view kMagic = "cpt-checkpoint\n";

json config_to_json(const model::ModelConfig& c) {
  return json{{"layers", c.layers},   {"hidden", c.hidden},
              {"heads", c.heads},     {"vocab", c.vocab},
              {"max_context", c.max_context}, {"ffn", c.ffn}};
}

model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.heads = j.at("heads").get<int>();
  c.vocab = j.at("vocab").get<int>();
  c.max_context = j.at("max_context").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.validate();
  return c;
}

using NamedArrays = std::vector<std::pair<std::string, const Matrix*>>;

std::string serialize(json header, const NamedArrays& arrays) {
  json dir = json::array();
  for (const auto& [name, m] : arrays) {
    dir.push_back({{"name", name}, {"shape", {m->rows(), m->cols()}}});
  }
  header["format_version"] = kFormatVersion;
  header["arrays"] = std::move(dir);
  std::string out(kMagic);
  out += header.dump();
  out += '\n';
  for (const auto& [name, m] : arrays) {
    const auto bytes = static_cast<std::size_t>(m->size()) * sizeof(double);
    const auto* p = reinterpret_cast<const char*>(m->data());
    out.append(p, bytes);
  }
  return out;
}

struct Parsed {
  json header;
  std::map<std::string, Matrix> arrays;
};

Parsed parse(const std::string& bytes, std::string_view expected_kind) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0) {
    throw FormatError("not a cpt checkpoint");
  }
  std::size_t nl = bytes.find('\n', kMagic.size());
  if (nl == std::string::npos) throw FormatError("truncated header");
  Parsed p;
  try {
    p.header = json::parse(bytes.substr(kMagic.size(), nl - kMagic.size()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  if (p.header.value("format_version", 0) != kFormatVersion) {
    throw FormatError("unsupported checkpoint format version");
  }
  if (p.header.value("kind", std::string()) != expected_kind) {
    throw FormatError("expected a " + std::string(expected_kind) +
                      " checkpoint");
  }
  std::size_t off = nl + 1;
  for (const auto& entry : p.header.at("arrays")) {
    auto name = entry.at("name").get<std::string>();
    auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw FormatError("negative array shape");
    Matrix m(rows, cols);
    const auto n = static_cast<std::size_t>(m.size()) * sizeof(double);
    if (off + n > bytes.size()) throw FormatError("truncated array " + name);
    std::memcpy(m.data(), bytes.data() + off, n);
    off += n;
    p.arrays.emplace(std::move(name), std::move(m));
  }
  if (off != bytes.size()) throw FormatError("trailing bytes in checkpoint");
  return p;
}

Matrix take(Parsed& p, const std::string& name, Eigen::Index rows,
            Eigen::Index cols) {
  auto it = p.arrays.find(name);
  if (it == p.arrays.end()) throw FormatError("missing array " + name);
  if (it->second.rows() != rows || it->second.cols() != cols) {
    throw FormatError("array " + name + " has unexpected shape");
  }
  return std::move(it->second);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string serialize_base(const model::BaseParams& base,
                           const Vocabulary& vocab) {
  if (vocab.size() != base.config.vocab) {
    throw DimensionError("vocabulary size does not match model config");
  }
  NamedArrays arrays;
  base.for_each([&](const std::string& name, const Matrix& m) {
    arrays.emplace_back(name, &m);
  });
  json header{{"kind", "base"},
              {"model", config_to_json(base.config)},
              {"vocab", vocab.tokens()}};
  return serialize(std::move(header), arrays);
}

void save_base(const std::filesystem::path& path,
               const model::BaseParams& base, const Vocabulary& vocab) {
  write_file_atomic(path, serialize_base(base, vocab));
}

LoadedBase load_base(const std::filesystem::path& path) {
  Parsed p = parse(read_file(path), "base");
  auto config = config_from_json(p.header.at("model"));
  Vocabulary vocab(p.header.at("vocab").get<std::vector<std::string>>());
  if (vocab.size() != config.vocab) {
    throw FormatError("vocabulary size does not match model config");
  }
  model::BaseParams base = model::BaseParams::init(config, 0, 0.0);
  base.for_each([&](const std::string& name, Matrix& m) {
    m = take(p, name, m.rows(), m.cols());
  });
  return LoadedBase{std::move(base), std::move(vocab)};
}

std::string serialize_prefix(const model::PrefixParams& prefix,
                             const model::ModelConfig& config, int d_prime) {
  if (prefix.h.cols() != config.prefix_width()) {
    throw DimensionError("prefix width does not match model config");
  }
  json header{{"kind", "prefix"},
              {"model", config_to_json(config)},
              {"m_len", prefix.m_len()},
              {"d_prime", d_prime}};
  return serialize(std::move(header), {{"prefix", &prefix.h}});
}

void save_prefix(const std::filesystem::path& path,
                 const model::PrefixParams& prefix,
                 const model::ModelConfig& config, int d_prime) {
  write_file_atomic(path, serialize_prefix(prefix, config, d_prime));
}

LoadedPrefix load_prefix(const std::filesystem::path& path) {
  Parsed p = parse(read_file(path), "prefix");
  LoadedPrefix out;
  out.config = config_from_json(p.header.at("model"));
  out.d_prime = p.header.at("d_prime").get<int>();
  int m_len = p.header.at("m_len").get<int>();
  out.prefix.layers = out.config.layers;
  out.prefix.hidden = out.config.hidden;
  out.prefix.h = take(p, "prefix", m_len, out.config.prefix_width());
  return out;
}

void save_train_state(const std::filesystem::path& path,
                      const TrainState& state,
                      const model::ModelConfig& config) {
  NamedArrays arrays{{"h_prime", &state.state.h_prime},
                     {"w", &state.state.w}};
  if (state.adam_m.size() != state.adam_v.size()) {
    throw DimensionError("optimizer moment lists differ in length");
  }
  for (std::size_t i = 0; i < state.adam_m.size(); ++i) {
    arrays.emplace_back("adam_m" + std::to_string(i), &state.adam_m[i]);
    arrays.emplace_back("adam_v" + std::to_string(i), &state.adam_v[i]);
  }
  json header{{"kind", "train_state"},
              {"model", config_to_json(config)},
              {"m_len", state.state.m_len()},
              {"d_prime", state.state.d_prime()},
              {"adam_step", state.adam_step},
              {"moments", state.adam_m.size()},
              {"stage", state.stage},
              {"epochs_done", state.epochs_done}};
  write_file_atomic(path, serialize(std::move(header), arrays));
}

TrainState load_train_state(const std::filesystem::path& path,
                            const model::ModelConfig& config) {
  Parsed p = parse(read_file(path), "train_state");
  if (!(config_from_json(p.header.at("model")) == config)) {
    throw FormatError("training state was written for another model config");
  }
  TrainState s;
  int m_len = p.header.at("m_len").get<int>();
  int d_prime = p.header.at("d_prime").get<int>();
  s.state.h_prime = take(p, "h_prime", m_len, d_prime);
  s.state.w = take(p, "w", d_prime, config.prefix_width());
  auto n = p.header.at("moments").get<std::size_t>();
  for (std::size_t i = 0; i < n; ++i) {
    auto name_m = "adam_m" + std::to_string(i);
    auto name_v = "adam_v" + std::to_string(i);
    auto it = p.arrays.find(name_m);
    auto jt = p.arrays.find(name_v);
    if (it == p.arrays.end() || jt == p.arrays.end()) {
      throw FormatError("missing optimizer moment " + std::to_string(i));
    }
    s.adam_m.push_back(std::move(it->second));
    s.adam_v.push_back(std::move(jt->second));
  }
  s.adam_step = p.header.at("adam_step").get<std::int64_t>();
  s.stage = p.header.at("stage").get<int>();
  s.epochs_done = p.header.at("epochs_done").get<int>();
  return s;
}

}  // namespace cpt::checkpoint
