#include "mkgm/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace mkgm {

namespace {

constexpr char kMagic[5] = {'M', 'K', 'G', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

enum class FieldKind : std::uint32_t { scalar = 0, complex_ = 1, vector3 = 2 };

struct RecordHeader {
    FieldKind kind;
    std::array<std::uint32_t, 3> dims;
    std::array<double, 3> extents;
    double time;
    double epsilon;
    std::string name;
};

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

void write_record(std::ostream& os, const RecordHeader& h, const double* payload,
                  std::size_t count) {
    os.write(kMagic, 5);
    write_u32(os, kVersion);
    write_u32(os, std::uint32_t(h.kind));
    for (auto d : h.dims) write_u32(os, d);
    for (auto e : h.extents) write_f64(os, e);
    write_f64(os, h.time);
    write_f64(os, h.epsilon);
    write_u32(os, std::uint32_t(h.name.size()));
    os.write(h.name.data(), std::streamsize(h.name.size()));
    os.write(reinterpret_cast<const char*>(payload), std::streamsize(count * 8));
}

bool read_exact(std::istream& is, char* dst, std::size_t n) {
    is.read(dst, std::streamsize(n));
    return std::size_t(is.gcount()) == n;
}

struct Record {
    RecordHeader header;
    std::vector<double> payload;
};

// Reads one record; returns false on clean EOF, throws on corruption.
bool read_record(std::istream& is, Record& rec, const std::string& path) {
    char magic[5];
    is.read(magic, 5);
    if (is.gcount() == 0) return false;
    if (is.gcount() != 5 || std::memcmp(magic, kMagic, 5) != 0)
        throw std::runtime_error(path + ": bad magic bytes");
    auto need = [&](char* dst, std::size_t n, const char* what) {
        if (!read_exact(is, dst, n))
            throw std::runtime_error(path + ": truncated " + what);
    };
    std::uint32_t version = 0, kind = 0, namelen = 0;
    std::array<std::uint32_t, 3> dims{};
    need(reinterpret_cast<char*>(&version), 4, "header");
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported snapshot version " +
                                 std::to_string(version));
    need(reinterpret_cast<char*>(&kind), 4, "header");
    need(reinterpret_cast<char*>(dims.data()), 12, "header");
    need(reinterpret_cast<char*>(rec.header.extents.data()), 24, "header");
    need(reinterpret_cast<char*>(&rec.header.time), 8, "header");
    need(reinterpret_cast<char*>(&rec.header.epsilon), 8, "header");
    need(reinterpret_cast<char*>(&namelen), 4, "header");
    rec.header.name.resize(namelen);
    if (namelen) need(rec.header.name.data(), namelen, "name");
    rec.header.kind = FieldKind(kind);
    rec.header.dims = dims;
    std::size_t cells = std::size_t(dims[0]) * dims[1] * dims[2];
    std::size_t comps = kind == 0 ? 1 : kind == 1 ? 2 : 3;
    rec.payload.resize(cells * comps);
    if (!read_exact(is, reinterpret_cast<char*>(rec.payload.data()), rec.payload.size() * 8))
        throw std::runtime_error(path + ": truncated payload in field '" + rec.header.name + "'");
    return true;
}

RecordHeader header_for(const Grid& g, FieldKind kind, const std::string& name, double t,
                        double eps) {
    RecordHeader h;
    h.kind = kind;
    for (int a = 0; a < 3; ++a) {
        h.dims[a] = std::uint32_t(g.n[a]);
        h.extents[a] = g.box[a];
    }
    h.time = t;
    h.epsilon = eps;
    h.name = name;
    return h;
}

void write_scalar(std::ostream& os, const ScalarField& f, const std::string& name, double t,
                  double eps) {
    write_record(os, header_for(f.grid(), FieldKind::scalar, name, t, eps), f.data(), f.size());
}

void write_complex(std::ostream& os, const ComplexField& f, const std::string& name, double t,
                   double eps) {
    write_record(os, header_for(f.grid(), FieldKind::complex_, name, t, eps),
                 reinterpret_cast<const double*>(f.data()), f.size() * 2);
}

void write_vector3(std::ostream& os, const VectorField3& f, const std::string& name, double t,
                   double eps) {
    std::vector<double> inter(f.size() * 3);
    for (std::size_t i = 0; i < f.size(); ++i)
        for (int a = 0; a < 3; ++a) inter[3 * i + a] = f[a][i];
    write_record(os, header_for(f.grid(), FieldKind::vector3, name, t, eps), inter.data(),
                 inter.size());
}

std::map<std::string, Record> read_all(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path);
    std::map<std::string, Record> out;
    Record rec;
    while (read_record(is, rec, path)) out[rec.header.name] = std::move(rec);
    if (out.empty()) throw std::runtime_error(path + ": no field records");
    return out;
}

GridPtr grid_of(const Record& rec) {
    return make_grid({int(rec.header.dims[0]), int(rec.header.dims[1]), int(rec.header.dims[2])},
                     rec.header.extents);
}

ScalarField to_scalar(const Record& rec, GridPtr g) {
    ScalarField f(g);
    std::memcpy(f.data(), rec.payload.data(), f.size() * 8);
    return f;
}

ComplexField to_complex(const Record& rec, GridPtr g) {
    ComplexField f(g);
    std::memcpy(reinterpret_cast<double*>(f.data()), rec.payload.data(), f.size() * 16);
    return f;
}

VectorField3 to_vector3(const Record& rec, GridPtr g) {
    VectorField3 f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        for (int a = 0; a < 3; ++a) f[a][i] = rec.payload[3 * i + a];
    return f;
}

const Record& need_field(const std::map<std::string, Record>& recs, const std::string& name,
                         const std::string& path) {
    auto it = recs.find(name);
    if (it == recs.end()) throw std::runtime_error(path + ": missing field '" + name + "'");
    return it->second;
}

}  // namespace

void save_kgm_state(const std::string& path, const KgmState& s) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot write " + path);
    write_complex(os, s.phi, "phi", s.t, s.eps);
    write_complex(os, s.pi, "pi", s.t, s.eps);
    write_vector3(os, s.A, "A", s.t, s.eps);
    write_vector3(os, s.E, "E", s.t, s.eps);
    if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

KgmState load_kgm_state(const std::string& path) {
    auto recs = read_all(path);
    const Record& phi = need_field(recs, "phi", path);
    GridPtr g = grid_of(phi);
    KgmState s;
    s.grid = g;
    s.phi = to_complex(phi, g);
    s.pi = to_complex(need_field(recs, "pi", path), g);
    s.A = to_vector3(need_field(recs, "A", path), g);
    s.E = to_vector3(need_field(recs, "E", path), g);
    s.eps = phi.header.epsilon;
    s.t = phi.header.time;
    return s;
}

void save_rem_state(const std::string& path, const RemState& s) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot write " + path);
    write_vector3(os, s.u, "u", s.t, 0.0);
    write_scalar(os, s.rho, "rho", s.t, 0.0);
    write_vector3(os, s.E, "E", s.t, 0.0);
    write_vector3(os, s.B, "B", s.t, 0.0);
    if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

RemState load_rem_state(const std::string& path) {
    auto recs = read_all(path);
    const Record& u = need_field(recs, "u", path);
    GridPtr g = grid_of(u);
    RemState s;
    s.grid = g;
    s.u = to_vector3(u, g);
    s.rho = to_scalar(need_field(recs, "rho", path), g);
    s.E = to_vector3(need_field(recs, "E", path), g);
    s.B = to_vector3(need_field(recs, "B", path), g);
    s.t = u.header.time;
    return s;
}

}  // namespace mkgm
