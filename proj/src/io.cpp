#include "mdflow/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mdflow {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << text;
    if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

}  // namespace

std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InvalidArgument("csv: no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    const std::string& cell = rows.at(row).at(column(name));
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0') throw InvalidArgument("csv: '" + cell + "' is not a number");
    return v;
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_commas(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InvalidArgument("csv: row with " + std::to_string(cells.size()) + " cells, expected "
                                  + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) { write_file(path, to_csv(table)); }

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

CsvTable errors_table(const ErrorReport& report, bool timing) {
    CsvTable t;
    t.header = {"tau", "l2_error", "h1_error", "order_l2", "order_h1", "runtime_s"};
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const ErrorRow& r = report.rows[i];
        t.rows.push_back({format_exact(r.tau), format_exact(r.l2), format_exact(r.h1),
                          i ? format_exact(report.order_l2[i - 1]) : "",
                          i ? format_exact(report.order_h1[i - 1]) : "",
                          format_exact(timing ? r.runtime_s : 0.0)});
    }
    return t;
}

CsvTable diagnostics_table(const std::vector<DiagnosticsBlock>& blocks) {
    CsvTable t;
    t.header = {"tau", "step", "t", "iterations", "residual", "divergence", "kinetic_energy"};
    for (const auto& b : blocks) {
        for (const auto& d : b.steps) {
            t.rows.push_back({format_exact(b.tau), std::to_string(d.step), format_exact(d.t),
                              std::to_string(d.iterations), format_exact(d.residual),
                              format_exact(d.divergence), format_exact(d.kinetic_energy)});
        }
    }
    return t;
}

void write_vtk(const std::string& path, const MovedMesh& mesh, const DofMaps& dofs,
               const FEFunction* velocity, const FEFunction* pressure) {
    const std::size_t nv = mesh.num_vertices();
    const std::size_t nt = mesh.num_triangles();
    std::string s;
    s += "# vtk DataFile Version 3.0\n";
    s += "mdflow t=" + format_exact(mesh.time()) + "\n";
    s += "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    s += "POINTS " + std::to_string(nv) + " double\n";
    for (std::size_t i = 0; i < nv; ++i) {
        const Vec2& x = mesh.vertex(i);
        s += format_exact(x.x()) + " " + format_exact(x.y()) + " 0\n";
    }
    s += "CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt) + "\n";
    for (const auto& tri : mesh.base->triangles) {
        s += "3 " + std::to_string(tri[0]) + " " + std::to_string(tri[1]) + " " + std::to_string(tri[2]) + "\n";
    }
    s += "CELL_TYPES " + std::to_string(nt) + "\n";
    for (std::size_t i = 0; i < nt; ++i) s += "5\n";
    if (velocity || pressure) {
        s += "POINT_DATA " + std::to_string(nv) + "\n";
        if (velocity) {
            if (static_cast<std::size_t>(velocity->values.size()) != dofs.num_velocity_dofs) {
                throw InvalidArgument("write_vtk: velocity has the wrong number of dofs");
            }
            s += "VECTORS velocity double\n";
            for (std::size_t i = 0; i < nv; ++i) {
                const int n = static_cast<int>(i);
                s += format_exact(velocity->values[dofs.velocity_dof(n, 0)]) + " "
                     + format_exact(velocity->values[dofs.velocity_dof(n, 1)]) + " 0\n";
            }
        }
        if (pressure) {
            if (static_cast<std::size_t>(pressure->values.size()) != nv) {
                throw InvalidArgument("write_vtk: pressure has the wrong number of dofs");
            }
            s += "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
            for (std::size_t i = 0; i < nv; ++i) s += format_exact(pressure->values[i]) + "\n";
        }
    }
    write_file(path, s);
}

VtkData read_vtk(const std::string& path) {
    std::istringstream is(read_file(path));
    std::string line;
    std::getline(is, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw InvalidArgument("read_vtk: not a legacy VTK file");
    VtkData d;
    std::string word;
    auto bad = [&path]() { return InvalidArgument("read_vtk: malformed file '" + path + "'"); };
    while (is >> word) {
        if (word == "POINTS") {
            std::size_t n;
            std::string type;
            if (!(is >> n >> type)) throw bad();
            d.points.resize(n);
            for (auto& p : d.points) {
                double z;
                if (!(is >> p.x() >> p.y() >> z)) throw bad();
            }
        } else if (word == "CELLS") {
            std::size_t n, total;
            if (!(is >> n >> total)) throw bad();
            d.cells.resize(n);
            for (auto& c : d.cells) {
                int k;
                if (!(is >> k >> c[0] >> c[1] >> c[2]) || k != 3) throw bad();
            }
        } else if (word == "VECTORS") {
            std::string name, type;
            is >> name >> type;
            d.velocity.resize(d.points.size());
            for (auto& v : d.velocity) {
                double z;
                if (!(is >> v.x() >> v.y() >> z)) throw bad();
            }
        } else if (word == "SCALARS") {
            std::string name, type, lt, table;
            int comps;
            is >> name >> type >> comps >> lt >> table;
            d.pressure.resize(d.points.size());
            for (auto& p : d.pressure) {
                if (!(is >> p)) throw bad();
            }
        }
    }
    return d;
}

}  // namespace mdflow
