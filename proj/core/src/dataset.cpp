#include "trajfuse/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "record files are little-endian float32; big-endian hosts are not supported");
static_assert(sizeof(float) == 4);

namespace trajfuse {

using nlohmann::json;

namespace {

std::string record_file_name(const std::string& id, size_t index) {
  std::string safe;
  safe.reserve(id.size());
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-' || c == '.';
    safe.push_back(ok ? c : '_');
  }
  if (safe.empty() || safe == "." || safe == "..") {
    safe = "traj_" + std::to_string(index);
  }
  return safe + ".bin";
}

[[noreturn]] void fail(const std::string& msg) { throw DataError(msg); }

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

int require_positive_int(const json& j, const char* key, const std::filesystem::path& where) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    fail("manifest " + where.string() + ": missing or non-integer field '" + key + "'");
  }
  int v = j[key].get<int>();
  if (v <= 0) fail("manifest " + where.string() + ": field '" + key + "' must be positive");
  return v;
}

// Copies `count` float32 values from the record buffer, tracking the running
// byte offset so truncation errors can name the failing block and position.
void read_block(const std::vector<char>& buf, size_t& offset, float* dst, size_t count,
                const std::string& traj_id, const char* block,
                const std::filesystem::path& file) {
  size_t bytes = count * sizeof(float);
  if (offset + bytes > buf.size()) {
    std::ostringstream msg;
    msg << "truncated record " << file.string() << " for trajectory '" << traj_id
        << "': block '" << block << "' needs " << bytes << " bytes at byte offset " << offset
        << " but the file holds " << buf.size() << " bytes";
    fail(msg.str());
  }
  std::memcpy(dst, buf.data() + offset, bytes);
  offset += bytes;
}

void write_block(std::ofstream& out, const float* src, size_t count) {
  out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count * sizeof(float)));
}

}  // namespace

const ModalityInfo* DatasetManifest::find_modality(const std::string& name) const {
  for (const auto& m : modalities) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const Trajectory* Dataset::find(const std::string& id) const {
  for (const auto& t : trajectories) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const Trajectory& Dataset::at(const std::string& id) const {
  if (const Trajectory* t = find(id)) return *t;
  fail("unknown trajectory id '" + id + "' in " + manifest.role + " dataset");
}

void validate_dataset(const Dataset& dataset) {
  const DatasetManifest& m = dataset.manifest;
  if (m.role != "target" && m.role != "prior") {
    fail("manifest role must be 'target' or 'prior', got '" + m.role + "'");
  }
  if (m.action_dim <= 0) fail("manifest action_dim must be positive");
  if (m.state_dim <= 0) fail("manifest state_dim must be positive");
  if (m.language_dim && *m.language_dim <= 0) fail("manifest language_dim must be positive when present");

  std::set<std::string> modality_names;
  for (const auto& mod : m.modalities) {
    if (mod.dim <= 0) fail("modality '" + mod.name + "' has non-positive dim");
    if (!modality_names.insert(mod.name).second) fail("duplicate modality name '" + mod.name + "'");
  }

  if (m.trajectory_count != dataset.trajectory_count()) {
    fail("manifest trajectory_count " + std::to_string(m.trajectory_count) +
         " does not match decoded trajectory count " + std::to_string(dataset.trajectory_count()));
  }

  std::set<std::string> ids;
  for (const auto& t : dataset.trajectories) {
    if (!ids.insert(t.id).second) fail("duplicate trajectory id '" + t.id + "'");
    int n = t.frames();
    if (n < 1) fail("trajectory '" + t.id + "': frames must be non-empty");
    auto check_dims = [&](const MatrixF& mat, int cols, const char* field) {
      if (mat.rows != n || mat.cols != cols) {
        std::ostringstream msg;
        msg << "trajectory '" << t.id << "': field '" << field << "' is " << mat.rows << "x"
            << mat.cols << ", expected " << n << "x" << cols;
        fail(msg.str());
      }
    };
    check_dims(t.ee_positions, 3, "ee_positions");
    check_dims(t.states, m.state_dim, "states");
    check_dims(t.actions, m.action_dim, "actions");
    if (t.embeddings.size() != m.modalities.size()) {
      fail("trajectory '" + t.id + "': embedding set does not match manifest modalities");
    }
    for (const auto& mod : m.modalities) {
      auto it = t.embeddings.find(mod.name);
      if (it == t.embeddings.end()) {
        fail("trajectory '" + t.id + "': missing embeddings for modality '" + mod.name + "'");
      }
      check_dims(it->second, mod.dim, ("embeddings[" + mod.name + "]").c_str());
    }
    if (m.language_dim) {
      if (static_cast<int>(t.instruction_embedding.size()) != *m.language_dim) {
        fail("trajectory '" + t.id + "': field 'instruction_embedding' has length " +
             std::to_string(t.instruction_embedding.size()) + ", expected " +
             std::to_string(*m.language_dim));
      }
    } else if (!t.instruction_embedding.empty()) {
      fail("trajectory '" + t.id + "': instruction_embedding present but manifest declares no language_dim");
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::filesystem::path manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    fail("missing manifest: " + manifest_path.string());
  }
  json j = parse_json_file(manifest_path);

  Dataset dataset;
  DatasetManifest& m = dataset.manifest;
  if (!j.contains("role") || !j["role"].is_string()) fail("manifest missing string field 'role'");
  m.role = j["role"].get<std::string>();
  m.action_dim = require_positive_int(j, "action_dim", manifest_path);
  m.state_dim = require_positive_int(j, "state_dim", manifest_path);
  if (j.contains("language_dim") && !j["language_dim"].is_null()) {
    m.language_dim = require_positive_int(j, "language_dim", manifest_path);
  }
  if (!j.contains("modalities") || !j["modalities"].is_array()) {
    fail("manifest missing array field 'modalities'");
  }
  for (const auto& mod : j["modalities"]) {
    ModalityInfo info;
    if (!mod.contains("name") || !mod.contains("dim")) fail("modality entry missing 'name' or 'dim'");
    info.name = mod["name"].get<std::string>();
    info.dim = mod["dim"].get<int>();
    m.modalities.push_back(std::move(info));
  }
  if (!j.contains("trajectory_count") || !j["trajectory_count"].is_number_integer()) {
    fail("manifest missing integer field 'trajectory_count'");
  }
  m.trajectory_count = j["trajectory_count"].get<int>();
  if (!j.contains("trajectories") || !j["trajectories"].is_array()) {
    fail("manifest missing array field 'trajectories'");
  }

  for (const auto& entry : j["trajectories"]) {
    Trajectory traj;
    if (!entry.contains("id") || !entry.contains("frames") || !entry.contains("file")) {
      fail("trajectory entry missing one of 'id', 'frames', 'file'");
    }
    traj.id = entry["id"].get<std::string>();
    int frames = entry["frames"].get<int>();
    if (frames < 1) fail("trajectory '" + traj.id + "': manifest frames must be >= 1");
    traj.instruction = entry.value("instruction", std::string{});

    std::filesystem::path record_path = dir / entry["file"].get<std::string>();
    std::ifstream in(record_path, std::ios::binary);
    if (!in) fail("missing record file " + record_path.string() + " for trajectory '" + traj.id + "'");
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    size_t offset = 0;
    traj.ee_positions = MatrixF(frames, 3);
    read_block(buf, offset, traj.ee_positions.data.data(), traj.ee_positions.data.size(),
               traj.id, "ee_positions", record_path);
    traj.states = MatrixF(frames, m.state_dim);
    read_block(buf, offset, traj.states.data.data(), traj.states.data.size(), traj.id, "states",
               record_path);
    traj.actions = MatrixF(frames, m.action_dim);
    read_block(buf, offset, traj.actions.data.data(), traj.actions.data.size(), traj.id, "actions",
               record_path);
    for (const auto& mod : m.modalities) {
      MatrixF emb(frames, mod.dim);
      read_block(buf, offset, emb.data.data(), emb.data.size(), traj.id, mod.name.c_str(),
                 record_path);
      traj.embeddings.emplace(mod.name, std::move(emb));
    }
    if (m.language_dim) {
      traj.instruction_embedding.resize(static_cast<size_t>(*m.language_dim));
      read_block(buf, offset, traj.instruction_embedding.data(), traj.instruction_embedding.size(),
                 traj.id, "instruction_embedding", record_path);
    }
    if (offset != buf.size()) {
      std::ostringstream msg;
      msg << "record " << record_path.string() << " for trajectory '" << traj.id << "' has "
          << (buf.size() - offset) << " trailing bytes past byte offset " << offset;
      fail(msg.str());
    }
    dataset.trajectories.push_back(std::move(traj));
  }

  validate_dataset(dataset);
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  validate_dataset(dataset);
  std::filesystem::create_directories(dir);

  json entries = json::array();
  for (size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& t = dataset.trajectories[i];
    std::string file = record_file_name(t.id, i);

    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write record file " + (dir / file).string());
    write_block(out, t.ee_positions.data.data(), t.ee_positions.data.size());
    write_block(out, t.states.data.data(), t.states.data.size());
    write_block(out, t.actions.data.data(), t.actions.data.size());
    for (const auto& mod : dataset.manifest.modalities) {
      const MatrixF& emb = t.embeddings.at(mod.name);
      write_block(out, emb.data.data(), emb.data.size());
    }
    if (dataset.manifest.language_dim) {
      write_block(out, t.instruction_embedding.data(), t.instruction_embedding.size());
    }
    if (!out) fail("write failure on record file " + (dir / file).string());

    entries.push_back({{"id", t.id},
                       {"frames", t.frames()},
                       {"file", file},
                       {"instruction", t.instruction}});
  }

  json j;
  j["role"] = dataset.manifest.role;
  j["action_dim"] = dataset.manifest.action_dim;
  j["state_dim"] = dataset.manifest.state_dim;
  if (dataset.manifest.language_dim) j["language_dim"] = *dataset.manifest.language_dim;
  json mods = json::array();
  for (const auto& mod : dataset.manifest.modalities) {
    mods.push_back({{"name", mod.name}, {"dim", mod.dim}});
  }
  j["modalities"] = mods;
  j["trajectory_count"] = dataset.trajectory_count();
  j["trajectories"] = entries;

  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write manifest " + (dir / "manifest.json").string());
  out << j.dump(2) << "\n";
}

std::vector<float> average_views(const std::vector<std::vector<float>>& views) {
  if (views.empty()) throw std::invalid_argument("average_views: need at least one view");
  size_t dim = views.front().size();
  for (const auto& v : views) {
    if (v.size() != dim) {
      throw std::invalid_argument("average_views: ragged view lengths (" +
                                  std::to_string(v.size()) + " vs " + std::to_string(dim) + ")");
    }
  }
  std::vector<float> mean(dim, 0.0f);
  double inv = 1.0 / static_cast<double>(views.size());
  for (size_t d = 0; d < dim; ++d) {
    double acc = 0.0;
    for (const auto& v : views) acc += v[d];
    mean[d] = static_cast<float>(acc * inv);
  }
  return mean;
}

PairingReport validate_pairing(const Dataset& target, const Dataset& prior) {
  if (target.manifest.action_dim != prior.manifest.action_dim) {
    fail("incompatible datasets: target action_dim " + std::to_string(target.manifest.action_dim) +
         " != prior action_dim " + std::to_string(prior.manifest.action_dim));
  }
  PairingReport report;
  for (const auto& mod : target.manifest.modalities) {
    const ModalityInfo* other = prior.manifest.find_modality(mod.name);
    if (other && other->dim == mod.dim) {
      report.common_modalities.push_back(mod);
    }
  }
  report.language_available = target.manifest.language_dim.has_value() &&
                              prior.manifest.language_dim.has_value() &&
                              *target.manifest.language_dim == *prior.manifest.language_dim;
  return report;
}

}  // namespace trajfuse
