#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ordsr/checkpoint.hpp"
#include "ordsr/dataio.hpp"
#include "ordsr/errors.hpp"
#include "ordsr/gradcheck.hpp"
#include "ordsr/metrics.hpp"
#include "ordsr/network.hpp"
#include "ordsr/optim.hpp"
#include "ordsr/pipeline.hpp"
#include "ordsr/transform.hpp"

namespace py = pybind11;
using namespace ordsr;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a, Shape shape) {
  Tensor t(shape);
  if (static_cast<std::size_t>(a.size()) != t.size()) throw DimensionError("array size does not match " + shape.str());
  std::copy(a.data(), a.data() + a.size(), t.raw());
  return t;
}

/// 2-D (H, W) or 3-D (B, H, W) array as a (B, 1, H, W) tensor.
Tensor image_tensor(const Array& a) {
  if (a.ndim() == 2) return to_tensor(a, {1, 1, static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))});
  if (a.ndim() == 3) {
    return to_tensor(a, {static_cast<std::size_t>(a.shape(0)), 1, static_cast<std::size_t>(a.shape(1)),
                         static_cast<std::size_t>(a.shape(2))});
  }
  throw DimensionError("expected an (H, W) or (B, H, W) array");
}

Array to_array(const Tensor& t, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(t.raw(), t.raw() + t.size(), out.mutable_data());
  return out;
}

Array image_array(const Tensor& t, bool batched) {
  const auto s = t.shape();
  if (!batched) return to_array(t, {static_cast<py::ssize_t>(s.h), static_cast<py::ssize_t>(s.w)});
  return to_array(t, {static_cast<py::ssize_t>(s.n), static_cast<py::ssize_t>(s.h), static_cast<py::ssize_t>(s.w)});
}

dataio::ImagePlane plane(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected an (H, W) array");
  dataio::ImagePlane p(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), p.values.begin());
  return p;
}

Array plane_array(const dataio::ImagePlane& p) {
  Array out({p.height, p.width});
  std::copy(p.values.begin(), p.values.end(), out.mutable_data());
  return out;
}

transform::CDCTBank bank_from(const Array& a) {
  if (a.ndim() != 3 || a.shape(1) != a.shape(2) || a.shape(0) != a.shape(1) * a.shape(2)) {
    throw DimensionError("bank must be shaped (n*n, n, n)");
  }
  const auto n = static_cast<std::size_t>(a.shape(1));
  return {static_cast<int>(n), to_tensor(a, {n * n, 1, n, n})};
}

Array bank_array(const transform::CDCTBank& b) {
  const auto n = static_cast<py::ssize_t>(b.n);
  return to_array(b.filters, {n * n, n, n});
}

transform::CDCTBank bank_or_dct(const std::optional<Array>& bank) {
  return bank ? bank_from(*bank) : transform::make_dct_bank();
}

}  // namespace

PYBIND11_MODULE(ordsr, m) {
  m.doc() = "Transform-domain super-resolution with a trainable orthogonal DCT layer";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  // transform
  m.def("dct_bank", [](int n) { return bank_array(transform::make_dct_bank(n)); }, py::arg("n") = 8,
        "Orthonormal DCT-II filters in zig-zag order, shaped (n*n, n, n).");
  m.def("zigzag", [](int n) {
    std::vector<std::pair<int, int>> out;
    for (const auto& f : transform::zigzag_indices(n)) out.emplace_back(f.k1, f.k2);
    return out;
  }, py::arg("n") = 8);
  m.def("analyze", [](const Array& image, const std::optional<Array>& bank) {
    const auto b = bank_or_dct(bank);
    const Tensor cube = transform::analyze(image_tensor(image), b);
    const auto s = cube.shape();
    if (image.ndim() == 2) return to_array(cube, {static_cast<py::ssize_t>(s.c), static_cast<py::ssize_t>(s.h), static_cast<py::ssize_t>(s.w)});
    return to_array(cube, {static_cast<py::ssize_t>(s.n), static_cast<py::ssize_t>(s.c), static_cast<py::ssize_t>(s.h), static_cast<py::ssize_t>(s.w)});
  }, py::arg("image"), py::arg("bank") = py::none(), "Block transform coefficients, one channel per filter.");
  m.def("synthesize", [](const Array& cube, const std::optional<Array>& bank) {
    const auto b = bank_or_dct(bank);
    const bool batched = cube.ndim() == 4;
    if (cube.ndim() != 3 && !batched) throw DimensionError("expected a (C, h, w) or (B, C, h, w) cube");
    const int off = batched ? 1 : 0;
    const Shape s{batched ? static_cast<std::size_t>(cube.shape(0)) : 1, static_cast<std::size_t>(cube.shape(off)),
                  static_cast<std::size_t>(cube.shape(off + 1)), static_cast<std::size_t>(cube.shape(off + 2))};
    return image_array(transform::synthesize(to_tensor(cube, s), b), batched);
  }, py::arg("cube"), py::arg("bank") = py::none());
  m.def("gram", [](const Array& bank) {
    const auto b = bank_from(bank);
    return to_array(transform::gram_matrix(b), {b.count(), b.count()});
  }, py::arg("bank"));
  m.def("ortho_penalty", [](const Array& bank, double epsilon) {
    const auto b = bank_from(bank);
    const auto r = transform::ortho_penalty(b, epsilon);
    return py::make_tuple(r.value, bank_array({b.n, r.grad}));
  }, py::arg("bank"), py::arg("epsilon") = 1e-3, "(penalty, gradient) of the pairwise orthogonality term.");
  m.def("spectrum_profile", [](const Array& image, const std::optional<Array>& bank) {
    return transform::spectrum_profile(image_tensor(image), bank_or_dct(bank));
  }, py::arg("image"), py::arg("bank") = py::none());

  // network
  py::class_<network::NetworkParams>(m, "Network")
      .def(py::init([](int depth, int threshold, int hidden, std::uint64_t seed) {
             const network::Architecture arch{8, depth, threshold, hidden};
             network::validate(arch);
             return network::init_params(arch, seed);
           }),
           py::arg("depth") = 14, py::arg("threshold") = 4, py::arg("hidden") = 64, py::arg("seed") = 1)
      .def_static("load", [](const std::string& path) { return checkpoint::load(path).params; })
      .def("save", [](const network::NetworkParams& p, const std::string& path, int scale) {
        optim::TrainConfig cfg;
        cfg.arch = p.architecture();
        cfg.scale = scale;
        checkpoint::save(path, {checkpoint::make_header(cfg, 0), p, std::nullopt});
      }, py::arg("path"), py::arg("scale") = 2)
      .def_property_readonly("depth", [](const network::NetworkParams& p) { return p.architecture().depth; })
      .def_property_readonly("threshold", &network::NetworkParams::threshold)
      .def_property_readonly("hidden", [](const network::NetworkParams& p) { return p.architecture().hidden; })
      .def_property("bank", [](const network::NetworkParams& p) { return bank_array(p.bank); },
                    [](network::NetworkParams& p, const Array& a) {
                      auto b = bank_from(a);
                      if (b.n != p.bank.n) throw DimensionError("bank size differs from the network's");
                      p.bank = std::move(b);
                    })
      .def("parameter_count", [](const network::NetworkParams& p) { return network::parameter_count(p); })
      .def("zero_cnn", [](network::NetworkParams& p) { network::zero_cnn(p); })
      .def("forward", [](const network::NetworkParams& p, const Array& image) {
        return image_array(network::infer(image_tensor(image), p), image.ndim() == 3);
      }, py::arg("image"), "Network output for images whose sides are multiples of 8.")
      .def("super_resolve", [](const network::NetworkParams& p, const Array& upscaled) {
        return plane_array(pipeline::sr_luma(plane(upscaled), p));
      }, py::arg("upscaled"), "SR of a bicubic-upscaled luma plane of any size, clamped to [0, 1].")
      .def("loss", [](const network::NetworkParams& p, const Array& x, const Array& y, double sigma, double gamma,
                      double epsilon) {
        optim::TrainConfig cfg;
        cfg.arch = p.architecture();
        cfg.sigma = sigma;
        cfg.gamma = gamma;
        cfg.epsilon = epsilon;
        const auto r = optim::total_loss(image_tensor(x), image_tensor(y), p, cfg).loss;
        return py::dict(py::arg("data") = r.data, py::arg("l2") = r.l2, py::arg("ortho") = r.ortho,
                        py::arg("total") = r.total);
      }, py::arg("x"), py::arg("y"), py::arg("sigma") = 1e-3, py::arg("gamma") = 1.0, py::arg("epsilon") = 1e-3);

  m.def("parameter_count", [](int depth, int threshold, int hidden) {
    return network::parameter_count(network::Architecture{8, depth, threshold, hidden});
  }, py::arg("depth") = 14, py::arg("threshold") = 4, py::arg("hidden") = 64);

  // data
  m.def("resize", [](const Array& image, int height, int width) {
    return plane_array(dataio::resize(plane(image), height, width));
  }, py::arg("image"), py::arg("height"), py::arg("width"), "Antialiased Keys bicubic resize.");
  m.def("bicubic_resize", [](const Array& image, double scale) {
    return plane_array(dataio::bicubic_resize(plane(image), scale));
  }, py::arg("image"), py::arg("scale"));
  m.def("degrade", [](const Array& image, int scale) { return plane_array(dataio::degrade(plane(image), scale)); },
        py::arg("image"), py::arg("scale"));
  m.def("read_luma", [](const std::string& path) { return plane_array(dataio::luma(dataio::read_image(path))); },
        py::arg("path"));

  // metrics
  m.def("psnr", [](const Array& a, const Array& b, double peak, int shave) {
    return metrics::psnr(plane(a), plane(b), peak, shave);
  }, py::arg("a"), py::arg("b"), py::arg("peak") = 255.0, py::arg("shave") = 0);
  m.def("ssim", [](const Array& a, const Array& b, int shave) { return metrics::ssim(plane(a), plane(b), shave); },
        py::arg("a"), py::arg("b"), py::arg("shave") = 0);

  // optimization
  m.def("lr_at", [](int epoch, double lr0, double decay, int decay_every) {
    optim::TrainConfig cfg;
    cfg.lr0 = lr0;
    cfg.decay = decay;
    cfg.decay_every = decay_every;
    return optim::lr_at(epoch, cfg);
  }, py::arg("epoch"), py::arg("lr0") = 1e-3, py::arg("decay") = 0.25, py::arg("decay_every") = 25);
  m.def("gradcheck", [](std::uint64_t seed, int probes, int bank_probes, bool corrupt) {
    gradcheck::Options o;
    o.seed = seed;
    o.probes = probes;
    o.bank_probes = bank_probes;
    o.corrupt = corrupt;
    const auto r = gradcheck::check_training_loss(o);
    py::dict groups;
    for (const auto& g : r.groups) groups[py::str(g.name)] = py::make_tuple(g.probes, g.max_rel_error);
    return py::dict(py::arg("passed") = r.passed, py::arg("probes") = r.probes,
                    py::arg("kinks_skipped") = r.kinks_skipped, py::arg("max_rel_error") = r.max_rel_error,
                    py::arg("groups") = groups);
  }, py::arg("seed") = 7, py::arg("probes") = 500, py::arg("bank_probes") = 128, py::arg("corrupt") = false);
}
