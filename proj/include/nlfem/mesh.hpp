#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlfem/core.hpp"

namespace nlfem {

enum class ElementLabel : int { Inactive = 0, Domain = 1, Dirichlet = 2 };

struct Element {
    std::array<int, 3> vertices{};
    ElementLabel label = ElementLabel::Domain;
    bool operator==(const Element&) const = default;
};

// Labeled triangulation. Elements are stored counterclockwise.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<Element> elements;
    double h = 0.0;      // maximal element diameter
    double delta = 0.0;  // horizon the mesh was built for, 0 if unknown

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    std::array<Vec2, 3> corners(int k) const {
        const auto& v = elements[k].vertices;
        return {vertices[v[0]], vertices[v[1]], vertices[v[2]]};
    }
    double area(int k) const;
};

struct MeshReport {
    int reoriented = 0;  // clockwise triangles flipped on load
};

// Orients every element counterclockwise, validates connectivity and sets h.
// Throws ParseError (line 0) on invalid data.
MeshReport finalize_mesh(Mesh& mesh);

double measure_h(const Mesh& mesh);

// Square [-delta, side+delta]^2 on a grid of spacing side/n_div; cells in (0, side)^2 are Domain,
// the layer is Dirichlet. Cells are split along the bottom-left to top-right diagonal.
Mesh generate_structured_mesh(double side, double delta, int n_div);

// Element adjacency through shared vertices, CSR layout, neighbors sorted ascending.
struct AdjacencyGraph {
    std::vector<std::int64_t> offsets;
    std::vector<int> neighbors;

    int size() const { return static_cast<int>(offsets.size()) - 1; }
    const int* begin(int k) const { return neighbors.data() + offsets[k]; }
    const int* end(int k) const { return neighbors.data() + offsets[k + 1]; }
    int degree(int k) const { return static_cast<int>(offsets[k + 1] - offsets[k]); }
};

AdjacencyGraph build_adjacency_graph(const Mesh& mesh);

// For every vertex the elements containing it, ascending.
struct VertexElementMap {
    std::vector<std::int64_t> offsets;
    std::vector<int> elements;
};

VertexElementMap build_vertex_element_map(const Mesh& mesh);

Mesh read_mesh(const std::string& path, MeshReport* report = nullptr);
Mesh parse_mesh(const std::string& text, MeshReport* report = nullptr);
void write_mesh(const Mesh& mesh, const std::string& path);
std::string format_mesh(const Mesh& mesh);

}  // namespace nlfem
