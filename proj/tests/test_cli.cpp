#include "helpers.hpp"

#include "simspec/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "simspec_test_cli";

int run(const std::string& args) {
    const std::string cmd = std::string(SIMSPEC_CLI_PATH) + " " + args + " > " +
                            (kRoot / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (kRoot / name).string(); }

std::string slurp(const std::string& name) { return simspec::read_text_file(kRoot / name); }

} // namespace

TEST_CASE("command-line pipeline") {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);

    CHECK(run("--help") == 0);
    CHECK(run("generate --kind nope --out " + path("x")) == 2);
    CHECK(run("generate --out") == 2);
    CHECK(run("build-lb --mesh " + path("missing.off") + " --out " + path("x")) == 2);

    REQUIRE(run("generate --kind isometric_bend --sims 4 --steps 3 --nx 20 --ny 5 --seed 3 --out " +
                path("bundle")) == 0);
    CHECK(fs::exists(kRoot / "bundle" / "manifest.json"));
    CHECK(fs::exists(kRoot / "bundle" / "provenance.json"));
    const std::string manifest = slurp("bundle/manifest.json");

    REQUIRE(run("generate --kind isometric_bend --sims 4 --steps 3 --nx 20 --ny 5 --seed 3 --out " +
                path("bundle")) == 0);
    CHECK(slurp("bundle/manifest.json") == manifest);
    CHECK(slurp("bundle/frames/sim2_step1.bin").size() == 126 * 3 * 8);

    REQUIRE(run("build-lb --bundle " + path("bundle") + " --p 12 --out " + path("lb")) == 0);
    for (const char* f : {"eigenvalues.csv", "eigenvectors.bin", "basis.json", "operator_coo.csv", "provenance.json"})
        CHECK(fs::exists(kRoot / "lb" / f));
    CHECK(run("build-lb --bundle " + path("bundle") + " --h 1e-8 --out " + path("tiny")) == 2);

    REQUIRE(run("project --bundle " + path("bundle") + " --basis " + path("lb") + " --out " + path("proj")) == 0);
    REQUIRE(run("analyze-decay --coeffs " + path("proj/coefficients.csv") + " --out " + path("decay")) == 0);
    CHECK(slurp("last.log").find("suggested truncation p = ") != std::string::npos);

    REQUIRE(run("morph --basis " + path("lb") + " --coeffs " + path("proj/coefficients.csv") +
                " --component 1 --offsets -1,-0.5,0,0.5,1 --bundle " + path("bundle") + " --out " +
                path("morph")) == 0);
    int frames = 0;
    for (const auto& e : fs::directory_iterator(kRoot / "morph"))
        if (e.path().extension() == ".bin") ++frames;
    CHECK(frames == 5);

    REQUIRE(run("trajectory --coeffs " + path("proj/coefficients.csv") + " --j 1 --out " + path("traj")) == 0);
    CHECK(slurp("traj/trajectory.csv").rfind("sim,step,alpha_x,alpha_y,alpha_z,step_color", 0) == 0);

    CHECK(run("validate --bundle " + path("bundle")) == 0);
    CHECK(run("project --bundle " + path("bundle") + " --basis " + path("nowhere") + " --out " + path("p2")) == 2);
}
