#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "sdeh/errors.hpp"
#include "sdeh/preprocess.hpp"

static_assert(std::endian::native == std::endian::little,
              "observation files are little-endian; add byte swapping for "
              "big-endian targets");

namespace sdeh {

namespace {

constexpr char kMagic[4] = {'N', 'O', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("observation file truncated while reading " + what);
  return value;
}

}  // namespace

void write_observations_binary(const std::string& path,
                               const NoisyObservations& obs) {
  obs.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(obs.n));
  write_pod(out, static_cast<std::uint32_t>(obs.y.cols()));
  write_pod(out, obs.h);
  // row-major payload
  std::vector<double> row(static_cast<std::size_t>(obs.y.cols()));
  for (std::int64_t i = 0; i < obs.y.rows(); ++i) {
    for (std::int64_t j = 0; j < obs.y.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = obs.y(i, j);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw ModelEvalError("write failure on " + path);
}

NoisyObservations read_observations_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open observation file: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("bad magic in observation file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kVersion) {
    std::ostringstream err;
    err << "unsupported observation file version " << version;
    throw ConfigError(err.str());
  }
  const auto n = static_cast<std::int64_t>(read_pod<std::uint64_t>(in, "n"));
  const auto d = static_cast<int>(read_pod<std::uint32_t>(in, "d"));
  const double h = read_pod<double>(in, "h");
  if (n < 1 || d < 1) throw ConfigError("observation file header invalid");

  NoisyObservations obs;
  obs.n = n;
  obs.h = h;
  obs.y.resize(n + 1, d);
  std::vector<double> row(static_cast<std::size_t>(d));
  for (std::int64_t i = 0; i <= n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw ConfigError("observation file truncated in payload");
    for (int j = 0; j < d; ++j) obs.y(i, j) = row[static_cast<std::size_t>(j)];
  }
  obs.validate();
  return obs;
}

void write_observations_csv(const std::string& path,
                            const NoisyObservations& obs) {
  obs.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out.precision(17);
  for (std::int64_t i = 0; i < obs.y.rows(); ++i) {
    for (std::int64_t j = 0; j < obs.y.cols(); ++j) {
      if (j) out << ',';
      out << obs.y(i, j);
    }
    out << '\n';
  }
  if (!out) throw ModelEvalError("write failure on " + path);
}

NoisyObservations read_observations_csv(const std::string& path, double h) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
        (void)used;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (lineno == 1) continue;  // header line
      std::ostringstream err;
      err << "non-numeric CSV cell at line " << lineno << " of " << path;
      throw ConfigError(err.str());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream err;
      err << "ragged CSV row at line " << lineno << " of " << path;
      throw ConfigError(err.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ConfigError("CSV needs at least two observation rows");
  NoisyObservations obs;
  obs.n = static_cast<std::int64_t>(rows.size()) - 1;
  obs.h = h;
  obs.y.resize(static_cast<std::int64_t>(rows.size()),
               static_cast<std::int64_t>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      obs.y(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
    }
  }
  obs.validate();
  return obs;
}

}  // namespace sdeh
