#include "nlfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nlfem {

double Mesh::area(int k) const {
    auto c = corners(k);
    return 0.5 * std::fabs(signed_area2(c[0], c[1], c[2]));
}

double measure_h(const Mesh& mesh) {
    double h = 0.0;
    for (int k = 0; k < mesh.element_count(); ++k) {
        auto c = mesh.corners(k);
        h = std::max({h, norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
    }
    return h;
}

MeshReport finalize_mesh(Mesh& mesh) {
    MeshReport report;
    const int nv = mesh.vertex_count();
    std::vector<char> used(nv, 0);
    for (int k = 0; k < mesh.element_count(); ++k) {
        auto& e = mesh.elements[k];
        for (int a = 0; a < 3; ++a) {
            if (e.vertices[a] < 0 || e.vertices[a] >= nv)
                throw ParseError("element " + std::to_string(k) + " has vertex index out of range", 0);
            used[e.vertices[a]] = 1;
        }
        auto c = mesh.corners(k);
        double a2 = signed_area2(c[0], c[1], c[2]);
        if (!(std::fabs(a2) > 0.0))
            throw ParseError("element " + std::to_string(k) + " has zero area", 0);
        if (a2 < 0.0) {
            std::swap(e.vertices[1], e.vertices[2]);
            ++report.reoriented;
        }
    }
    for (int v = 0; v < nv; ++v)
        if (!used[v]) throw ParseError("vertex " + std::to_string(v) + " is not referenced", 0);
    mesh.h = measure_h(mesh);
    return report;
}

Mesh generate_structured_mesh(double side, double delta, int n_div) {
    if (n_div < 2) throw ConfigError("n_div must be at least 2");
    if (!(side > 0.0) || !(delta > 0.0)) throw ConfigError("side and delta must be positive");
    const double g = side / n_div;
    const double ratio = delta / g;
    const long layers = std::lround(ratio);
    if (layers < 1 || std::fabs(ratio - static_cast<double>(layers)) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("delta must be a positive integer multiple of the grid spacing " +
                          std::to_string(g));

    const int m = static_cast<int>(layers);
    const int cells = n_div + 2 * m;
    const int nodes = cells + 1;
    Mesh mesh;
    mesh.delta = delta;
    mesh.vertices.reserve(static_cast<std::size_t>(nodes) * nodes);
    for (int j = 0; j < nodes; ++j)
        for (int i = 0; i < nodes; ++i)
            mesh.vertices.emplace_back((i - m) * side / n_div, (j - m) * side / n_div);

    mesh.elements.reserve(2 * static_cast<std::size_t>(cells) * cells);
    auto id = [nodes](int i, int j) { return j * nodes + i; };
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            bool inside = i >= m && i < m + n_div && j >= m && j < m + n_div;
            ElementLabel label = inside ? ElementLabel::Domain : ElementLabel::Dirichlet;
            mesh.elements.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, label});
            mesh.elements.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, label});
        }
    }
    finalize_mesh(mesh);
    return mesh;
}

VertexElementMap build_vertex_element_map(const Mesh& mesh) {
    VertexElementMap map;
    const int nv = mesh.vertex_count();
    map.offsets.assign(nv + 1, 0);
    for (const auto& e : mesh.elements)
        for (int v : e.vertices) ++map.offsets[v + 1];
    for (int v = 0; v < nv; ++v) map.offsets[v + 1] += map.offsets[v];
    map.elements.resize(map.offsets[nv]);
    std::vector<std::int64_t> fill(map.offsets.begin(), map.offsets.end() - 1);
    for (int k = 0; k < mesh.element_count(); ++k)
        for (int v : mesh.elements[k].vertices) map.elements[fill[v]++] = k;
    return map;
}

AdjacencyGraph build_adjacency_graph(const Mesh& mesh) {
    const VertexElementMap v2e = build_vertex_element_map(mesh);
    AdjacencyGraph graph;
    const int ne = mesh.element_count();
    graph.offsets.assign(ne + 1, 0);
    std::vector<int> scratch;
    for (int k = 0; k < ne; ++k) {
        scratch.clear();
        for (int v : mesh.elements[k].vertices)
            for (auto p = v2e.offsets[v]; p < v2e.offsets[v + 1]; ++p)
                if (v2e.elements[p] != k) scratch.push_back(v2e.elements[p]);
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        graph.neighbors.insert(graph.neighbors.end(), scratch.begin(), scratch.end());
        graph.offsets[k + 1] = static_cast<std::int64_t>(graph.neighbors.size());
    }
    return graph;
}

namespace {

// Splits off a trailing '#' comment and reports whether anything is left.
bool content_of(std::string& line) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    return line.find_first_not_of(" \t\r") != std::string::npos;
}

}  // namespace

Mesh parse_mesh(const std::string& text, MeshReport* report) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next = [&](const char* what) {
        while (std::getline(in, line)) {
            ++lineno;
            if (content_of(line)) return;
        }
        throw ParseError(std::string("unexpected end of file, expected ") + what, lineno + 1);
    };

    next("header");
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    long nv = -1, ne = -1;
    if (!(header >> magic >> version >> nv >> ne) || magic != "nlmesh" || version != 1 || nv < 0 ||
        ne < 0)
        throw ParseError("malformed header, expected 'nlmesh 1 <n_vertices> <n_elements>'", lineno);

    Mesh mesh;
    mesh.vertices.reserve(nv);
    std::vector<int> vertex_line(nv);
    for (long v = 0; v < nv; ++v) {
        next("vertex");
        std::istringstream ls(line);
        double x, y;
        std::string extra;
        if (!(ls >> x >> y) || (ls >> extra) || !std::isfinite(x) || !std::isfinite(y))
            throw ParseError("malformed vertex line", lineno);
        mesh.vertices.emplace_back(x, y);
        vertex_line[v] = lineno;
    }

    MeshReport local;
    std::vector<char> used(nv, 0);
    mesh.elements.reserve(ne);
    for (long k = 0; k < ne; ++k) {
        next("element");
        std::istringstream ls(line);
        long i, j, l;
        int label;
        std::string extra;
        if (!(ls >> i >> j >> l >> label) || (ls >> extra))
            throw ParseError("malformed element line", lineno);
        for (long idx : {i, j, l})
            if (idx < 0 || idx >= nv)
                throw ParseError("vertex index " + std::to_string(idx) + " out of range", lineno);
        if (i == j || j == l || i == l) throw ParseError("repeated vertex index", lineno);
        if (label < 0 || label > 2) throw ParseError("unknown label " + std::to_string(label), lineno);
        Element e{{static_cast<int>(i), static_cast<int>(j), static_cast<int>(l)},
                  static_cast<ElementLabel>(label)};
        double a2 = signed_area2(mesh.vertices[i], mesh.vertices[j], mesh.vertices[l]);
        if (!(a2 != 0.0)) throw ParseError("triangle with non-positive area", lineno);
        if (a2 < 0.0) {
            std::swap(e.vertices[1], e.vertices[2]);
            ++local.reoriented;
        }
        used[i] = used[j] = used[l] = 1;
        mesh.elements.push_back(e);
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (content_of(line)) throw ParseError("trailing content after last element", lineno);
    }
    for (long v = 0; v < nv; ++v)
        if (!used[v]) throw ParseError("vertex is not referenced by any element", vertex_line[v]);

    mesh.h = measure_h(mesh);
    if (report) *report = local;
    return mesh;
}

Mesh read_mesh(const std::string& path, MeshReport* report) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file " + path, 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_mesh(buffer.str(), report);
}

std::string format_mesh(const Mesh& mesh) {
    std::string out = "nlmesh 1 " + std::to_string(mesh.vertex_count()) + " " +
                      std::to_string(mesh.element_count()) + "\n";
    char buf[64];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
        out += buf;
    }
    for (const auto& e : mesh.elements) {
        std::snprintf(buf, sizeof buf, "%d %d %d %d\n", e.vertices[0], e.vertices[1], e.vertices[2],
                      static_cast<int>(e.label));
        out += buf;
    }
    return out;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write mesh file " + path);
    out << format_mesh(mesh);
}

}  // namespace nlfem
