#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlfem/harness.hpp"

namespace py = pybind11;
using namespace nlfem;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

// (data, indices, indptr, shape), the argument of scipy.sparse.csr_matrix.
py::tuple csr_tuple(const CsrMatrix& A) {
    std::vector<std::int64_t> ptr(A.row_ptr.begin(), A.row_ptr.end());
    std::vector<std::int32_t> idx(A.col_idx.begin(), A.col_idx.end());
    return py::make_tuple(to_array(A.values), to_array(idx), to_array(ptr), py::make_tuple(A.rows, A.cols));
}

py::dict row_dict(const ConvergenceRow& r) {
    py::dict d;
    d["h"] = r.h;
    d["delta"] = r.delta;
    d["dof"] = r.dof;
    d["l2_error"] = r.l2_error;
    d["rate"] = r.rate;
    d["n_div"] = r.n_div;
    d["assembly_seconds"] = r.assembly_seconds;
    d["iterations"] = r.iterations;
    d["nnz"] = r.nnz;
    d["warnings"] = r.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_nlfem, m) {
    m.doc() = "Nonlocal finite element assembly";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("h", [](const Mesh& mesh) { return mesh.h; })
        .def_property_readonly("delta", [](const Mesh& mesh) { return mesh.delta; })
        .def_property_readonly("vertex_count", &Mesh::vertex_count)
        .def_property_readonly("element_count", &Mesh::element_count)
        .def("vertices",
             [](const Mesh& mesh) {
                 py::array_t<double> a({mesh.vertex_count(), 2});
                 auto v = a.mutable_unchecked<2>();
                 for (int i = 0; i < mesh.vertex_count(); ++i) {
                     v(i, 0) = mesh.vertices[i].x;
                     v(i, 1) = mesh.vertices[i].y;
                 }
                 return a;
             })
        .def("elements",
             [](const Mesh& mesh) {
                 py::array_t<int> a({mesh.element_count(), 3});
                 auto v = a.mutable_unchecked<2>();
                 for (int k = 0; k < mesh.element_count(); ++k)
                     for (int j = 0; j < 3; ++j) v(k, j) = mesh.elements[k].vertices[j];
                 return a;
             })
        .def("labels",
             [](const Mesh& mesh) {
                 std::vector<int> l;
                 for (const auto& e : mesh.elements) l.push_back(static_cast<int>(e.label));
                 return to_array(l);
             })
        .def("__str__", &format_mesh);

    m.def("structured_mesh", &generate_structured_mesh, py::arg("side"), py::arg("delta"), py::arg("n_div"));
    m.def("parse_mesh", [](const std::string& text) { return parse_mesh(text); }, py::arg("text"));

    m.def(
        "assemble",
        [](const Mesh& mesh, const std::string& kernel, double s, double delta, const std::string& ball,
           const std::string& ansatz, bool all_rows, int threads) {
            KernelSpec k = kernel_by_name(kernel, s, delta);
            if (!ball.empty()) k.ball = parse_ball(ball);
            AnsatzSpace an = make_ansatz(mesh, parse_ansatz(ansatz), k.n);
            AssemblyOptions o;
            o.rows = all_rows ? RowScope::AllRows : RowScope::FreeRows;
            o.n_threads = threads;
            CsrMatrix A;
            {
                py::gil_scoped_release release;
                A = bfs_assemble(mesh, build_adjacency_graph(mesh), k, an, o).system.A;
            }
            return py::make_tuple(csr_tuple(A), to_array(std::vector<int>(an.free_mask.begin(), an.free_mask.end())));
        },
        py::arg("mesh"), py::arg("kernel") = "fractional", py::arg("s") = 0.5, py::arg("delta") = 0.2,
        py::arg("ball") = "", py::arg("ansatz") = "cg", py::arg("all_rows") = false, py::arg("threads") = 1,
        "Stiffness matrix as ((data, indices, indptr, shape), free_mask).");

    m.def(
        "run_study",
        [](const std::string& kernel, double s, double delta, std::vector<int> levels, const std::string& ansatz,
           const std::string& mode, std::vector<double> deltas, const std::string& ball, int threads) {
            StudyConfig c;
            c.kernel = kernel;
            c.s = s;
            c.delta = delta;
            c.levels = std::move(levels);
            c.ansatz = parse_ansatz(ansatz);
            c.mode = parse_study_mode(mode);
            c.deltas = std::move(deltas);
            if (!ball.empty()) c.ball = parse_ball(ball);
            c.threads = threads;
            std::vector<ConvergenceRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_study(c);
            }
            py::list out;
            for (const auto& r : rows) out.append(row_dict(r));
            return out;
        },
        py::arg("kernel") = "fractional", py::arg("s") = 0.5, py::arg("delta") = 0.2,
        py::arg("levels") = std::vector<int>{5, 10}, py::arg("ansatz") = "cg", py::arg("mode") = "refine-h",
        py::arg("deltas") = std::vector<double>{}, py::arg("ball") = "", py::arg("threads") = 1);

    m.def(
        "kernel_value",
        [](const std::string& kernel, double s, double delta, std::array<double, 2> x, std::array<double, 2> y) {
            KernelSpec k = kernel_by_name(kernel, s, delta);
            KernelMatrix v = k.value({x[0], x[1]}, {y[0], y[1]}, ElementLabel::Domain, ElementLabel::Domain);
            return std::vector<double>(v.begin(), v.begin() + k.n * k.n);
        },
        py::arg("kernel"), py::arg("s"), py::arg("delta"), py::arg("x"), py::arg("y"));

    m.def(
        "intersect_area",
        [](std::array<std::array<double, 2>, 3> t, std::array<double, 2> c, double delta, const std::string& ball) {
            Triangle tri{Vec2{t[0][0], t[0][1]}, Vec2{t[1][0], t[1][1]}, Vec2{t[2][0], t[2][1]}};
            return intersect_ball(tri, {c[0], c[1]}, delta, parse_ball(ball)).area();
        },
        py::arg("triangle"), py::arg("center"), py::arg("delta"), py::arg("ball"));
}
