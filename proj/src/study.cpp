#include "mdflow/study.hpp"

#include "mdflow/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace mdflow {

namespace {

namespace fs = std::filesystem;

std::string vtk_name(std::size_t tau_index, int step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "solution_tau%zu_%05d.vtk", tau_index, step);
    return buf;
}

void write_states(const Trajectory& traj, int stride, std::size_t tau_index, const fs::path& dir,
                  std::vector<std::string>& files) {
    if (stride <= 0) return;
    const int last = traj.final_state().index;
    for (const StepState& s : traj.states) {
        if (s.index % stride != 0 && s.index != last) continue;
        const fs::path path = dir / vtk_name(tau_index, s.index);
        write_vtk(path.string(), *s.mesh, traj.dofs, &s.u, &s.p);
        files.push_back(path.string());
    }
}

void print_report(const ErrorReport& r, std::ostream& log) {
    log << "tau            l2_error       h1_error       order_l2  order_h1\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        char buf[160];
        const ErrorRow& row = r.rows[i];
        if (i == 0) {
            std::snprintf(buf, sizeof buf, "%-14.6g %-14.6e %-14.6e\n", row.tau, row.l2, row.h1);
        } else {
            std::snprintf(buf, sizeof buf, "%-14.6g %-14.6e %-14.6e %-9.4f %-9.4f\n", row.tau, row.l2,
                          row.h1, r.order_l2[i - 1], r.order_h1[i - 1]);
        }
        log << buf;
    }
}

}  // namespace

std::string output_directory(const RunConfig& config) {
    if (const char* env = std::getenv("MDFLOW_OUTPUT_DIR"); env && *env) return env;
    return config.output.directory;
}

StudyResult run_study(const StudyConfig& config, StudyMode mode, std::ostream& log) {
    StudyResult result;
    const RunConfig& base = config.run;
    if (mode == StudyMode::Study && !config.manufactured) {
        log << "error: forcing.type: a study needs manufactured forcing\n";
        result.exit_code = kExitConfig;
        return result;
    }

    const fs::path dir = output_directory(base);
    result.directory = dir.string();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        log << "error: cannot create output directory '" << dir.string() << "': " << ec.message() << '\n';
        result.exit_code = kExitConfig;
        return result;
    }

    std::vector<DiagnosticsBlock> blocks;
    try {
        if (mode == StudyMode::Study) {
            StudyOptions opts;
            opts.substeps = base.substeps;
            opts.tolerance = base.tolerance;
            opts.max_iterations = base.max_iterations;
            opts.skew_convection = base.skew_convection;
            opts.timing = base.output.timing;
            std::size_t index = 0;
            if (base.output.vtk_stride > 0) {
                opts.on_run = [&](const Trajectory& traj) {
                    write_states(traj, base.output.vtk_stride, index++, dir, result.files);
                };
            }
            ErrorReport report =
                convergence_study(*config.manufactured, config.taus, base.h, base.T, opts);
            for (std::size_t i = 0; i < report.rows.size(); ++i) {
                blocks.push_back({report.rows[i].tau, report.diagnostics[i]});
            }
            result.report = std::move(report);
        } else {
            auto mesh = build_disk_mesh(base.h);
            std::vector<ErrorRow> rows;
            for (std::size_t i = 0; i < config.taus.size(); ++i) {
                RunConfig cfg = base;
                cfg.tau = config.taus[i];
                cfg.keep_states = cfg.output.vtk_stride > 0;
                const auto start = std::chrono::steady_clock::now();
                Trajectory traj = run(cfg, mesh);
                const double elapsed =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                blocks.push_back({cfg.tau, traj.diagnostics});
                write_states(traj, cfg.output.vtk_stride, i, dir, result.files);
                if (config.manufactured) {
                    const StepState& last = traj.final_state();
                    const ErrorNorms e =
                        error_norms(*last.mesh, traj.dofs, last.u, config.manufactured->exact(last.t));
                    rows.push_back({cfg.tau, e.l2, e.h1, base.output.timing ? elapsed : 0.0});
                }
                const StepDiagnostics& d = traj.diagnostics.back();
                log << "tau " << cfg.tau << ": " << traj.diagnostics.size() << " steps, final energy "
                    << d.kinetic_energy << ", max |div| " << d.divergence << '\n';
            }
            if (config.manufactured) {
                ErrorReport report = make_report(std::move(rows));
                report.h = base.h;
                report.T = base.T;
                result.report = std::move(report);
            }
        }
    } catch (const SolverError& e) {
        log << "solver failure: " << e.what() << '\n';
        result.exit_code = kExitSolver;
        return result;
    } catch (const GeometryError& e) {
        log << "geometry failure: " << e.what() << '\n';
        result.exit_code = kExitSolver;
        return result;
    } catch (const DomainEscapeError& e) {
        log << "flow map failure: " << e.what() << '\n';
        result.exit_code = kExitSolver;
        return result;
    }

    if (base.output.csv) {
        const fs::path diag = dir / "diagnostics.csv";
        write_csv(diag.string(), diagnostics_table(blocks));
        result.files.push_back(diag.string());
        if (result.report) {
            const fs::path errors = dir / "errors.csv";
            write_csv(errors.string(), errors_table(*result.report, base.output.timing));
            result.files.push_back(errors.string());
        }
    }

    if (result.report) print_report(*result.report, log);
    if (mode == StudyMode::Study) {
        const ErrorReport& r = *result.report;
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "spatial probe at h=%g: L2 %.3e, H1 %.3e (interpolation %.3e / %.3e)\n", r.h,
                      r.probe.estimate.l2, r.probe.estimate.h1, r.probe.fine.l2, r.probe.fine.h1);
        log << buf;
        if (!r.valid) {
            log << "INVALID: " << r.note << '\n';
            result.exit_code = kExitInvalidStudy;
        } else {
            log << "study valid\n";
        }
    }
    return result;
}

std::string mesh_info(const StudyConfig& config) {
    auto mesh = build_disk_mesh(config.run.h);
    const DofMaps dofs = taylor_hood(*mesh);
    std::ostringstream os;
    os << "target h        " << config.run.h << '\n'
       << "max edge        " << mesh->h << '\n'
       << "vertices        " << mesh->num_vertices() << '\n'
       << "triangles       " << mesh->num_triangles() << '\n'
       << "edges           " << mesh->num_edges() << '\n'
       << "velocity dofs   " << dofs.num_velocity_dofs << '\n'
       << "pressure dofs   " << dofs.num_pressure_dofs << '\n'
       << "area            " << mesh->area() << '\n'
       << "time steps      " << config.run.num_steps() << '\n';
    return os.str();
}

}  // namespace mdflow
