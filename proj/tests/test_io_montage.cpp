#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <set>

#include "erase/fastica.hpp"
#include "erase/io.hpp"
#include "helpers.hpp"

using namespace erase;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("erase_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Recording sample_recording() {
    Recording rec;
    rec.sample_rate = 2000.0;
    rec.channels = {{"C3", ChannelKind::scalp},
                    {"EMG1", ChannelKind::virtual_emg},
                    {"FORCE", ChannelKind::force}};
    rec.data.resize(3, 500);
    std::mt19937_64 gen(33);
    std::normal_distribution<double> d(0.0, 10.0);
    for (Eigen::Index c = 0; c < 3; ++c)
        for (Eigen::Index i = 0; i < 500; ++i) rec.data(c, i) = d(gen);
    return rec;
}

}  // namespace

TEST_CASE("binary recording round trip") {
    TempDir tmp;
    const Recording rec = sample_recording();
    write_recording(tmp.file("r.bin"), rec);
    const Recording back = read_recording(tmp.file("r.bin"));

    REQUIRE(back.sample_rate == rec.sample_rate);
    REQUIRE(back.channels.size() == 3);
    REQUIRE(back.channels[1].label == "EMG1");
    REQUIRE(back.channels[1].kind == ChannelKind::virtual_emg);
    REQUIRE(back.channels[2].kind == ChannelKind::force);
    // float32 storage: exact after one round trip through float
    for (Eigen::Index c = 0; c < 3; ++c)
        for (Eigen::Index i = 0; i < 500; ++i)
            REQUIRE(back.data(c, i) == static_cast<double>(static_cast<float>(rec.data(c, i))));
}

TEST_CASE("binary recording error paths") {
    TempDir tmp;
    const Recording rec = sample_recording();
    write_recording(tmp.file("r.bin"), rec);

    SECTION("truncation reports the failing byte offset") {
        std::ifstream in(tmp.file("r.bin"), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        const std::string cut = bytes.substr(0, bytes.size() / 2);
        std::ofstream out(tmp.file("cut.bin"), std::ios::binary);
        out << cut;
        out.close();
        try {
            read_recording(tmp.file("cut.bin"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(e.offset <= cut.size());
            REQUIRE(e.offset > 0);
        }
    }
    SECTION("bad magic is rejected at offset zero") {
        std::ofstream out(tmp.file("bad.bin"), std::ios::binary);
        out << "NOPEnope";
        out.close();
        try {
            read_recording(tmp.file("bad.bin"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(e.offset == 0);
        }
    }
    SECTION("NaN samples are rejected") {
        Recording bad = rec;
        bad.data(1, 7) = std::numeric_limits<double>::quiet_NaN();
        write_recording(tmp.file("nan.bin"), bad);
        REQUIRE_THROWS_AS(read_recording(tmp.file("nan.bin")), ParseError);
    }
}

TEST_CASE("csv recording matches the binary within float32 rounding") {
    TempDir tmp;
    const Recording rec = sample_recording();
    write_recording(tmp.file("r.bin"), rec);
    write_recording_csv(tmp.file("r.csv"), rec);
    const Recording bin = read_recording(tmp.file("r.bin"));
    const Recording csv = read_recording_csv(tmp.file("r.csv"));
    REQUIRE(csv.channels.size() == bin.channels.size());
    REQUIRE(csv.sample_rate == bin.sample_rate);
    for (Eigen::Index c = 0; c < 3; ++c)
        for (Eigen::Index i = 0; i < 500; ++i)
            REQUIRE(csv.data(c, i) == Catch::Approx(bin.data(c, i)).margin(1e-4));
}

TEST_CASE("events file round trip") {
    TempDir tmp;
    const std::vector<double> onsets = {5.0, 10.25, 17.5};
    write_events(tmp.file("e.txt"), onsets);
    REQUIRE(read_events(tmp.file("e.txt")) == onsets);
}

TEST_CASE("bundled montage") {
    const Montage m = default_montage();
    SECTION("128 electrodes with unique labels") {
        REQUIRE(m.labels.size() == 128);
        m.validate();
    }
    SECTION("hand motor clusters are present") {
        for (const auto& l : hand_motor_left_ha()) REQUIRE(m.contains(l));
        for (const auto& l : hand_motor_right_ha()) REQUIRE(m.contains(l));
    }
    SECTION("left HA selects the C3 cluster") {
        REQUIRE(m.ha_side() == HaSide::left);
        REQUIRE(m.hand_motor_labels() == hand_motor_left_ha());
        const auto contra = m.contralesional_labels();
        REQUIRE(std::set<std::string>(contra.begin(), contra.end()) ==
                std::set<std::string>(hand_motor_right_ha().begin(),
                                      hand_motor_right_ha().end()));
    }
    SECTION("right-sided variant mirrors the clusters") {
        const Montage r = default_montage(HaSide::right);
        REQUIRE(r.ha_side() == HaSide::right);
        REQUIRE(r.hand_motor_labels() == hand_motor_right_ha());
    }
}

TEST_CASE("label mirroring") {
    REQUIRE(mirror_label("C3") == "C4");
    REQUIRE(mirror_label("C4") == "C3");
    REQUIRE(mirror_label("FCC5h") == "FCC6h");
    REQUIRE(mirror_label("FCC6h") == "FCC5h");
    REQUIRE(mirror_label("Cz") == "Cz");
    REQUIRE(mirror_label("P10") == "P9");
}

TEST_CASE("montage file io") {
    TempDir tmp;
    const Montage m = default_montage().subset(
        {"C3", "C5", "C1", "FCC5h", "FCC3h", "CCP5h", "CCP3h",
         "C4", "C6", "C2", "FCC6h", "FCC4h", "CCP6h", "CCP4h"});
    write_montage(tmp.file("m.csv"), m);
    const Montage back = read_montage(tmp.file("m.csv"));
    REQUIRE(back.labels == m.labels);
    REQUIRE(back.ha == m.ha);
    REQUIRE(back.positions[0] == m.positions[0]);

    SECTION("duplicate labels are rejected") {
        std::ofstream out(tmp.file("dup.csv"));
        out << "label,x,y,ha\nC3,-0.3,0,1\nC3,-0.3,0,1\nC4,0.3,0,0\n";
        out.close();
        REQUIRE_THROWS_AS(read_montage(tmp.file("dup.csv")), InvalidSpecError);
    }
    SECTION("missing hand-motor member with a left HA is rejected by name") {
        std::ofstream out(tmp.file("incomplete.csv"));
        out << "label,x,y,ha\nC5,-0.5,0,1\nC4,0.3,0,0\n";
        out.close();
        REQUIRE_THROWS_WITH(read_montage(tmp.file("incomplete.csv")),
                            Catch::Matchers::ContainsSubstring("C3"));
    }
}

TEST_CASE("ica model bundle round trip") {
    TempDir tmp;
    Matrix data(3, 6000);
    data.row(0) = testutil::to_vector(testutil::uniform_noise(6000, 1)).transpose();
    data.row(1) = testutil::to_vector(testutil::laplace_noise(6000, 2)).transpose();
    data.row(2) = testutil::to_vector(testutil::sine(7.0, 2000.0, 6000)).transpose();
    Matrix mixing(3, 3);
    mixing << 1.0, 0.2, 0.1, -0.3, 0.9, 0.2, 0.4, -0.1, 1.1;
    FastIcaConfig cfg;
    cfg.seed = 12;
    const IcaModel model = fit_fastica(mixing * data, cfg);

    write_ica_model(tmp.file("m.bin"), model);
    const IcaModel back = read_ica_model(tmp.file("m.bin"));
    REQUIRE(back.n_components == model.n_components);
    REQUIRE(back.seed == model.seed);
    REQUIRE(back.iterations == model.iterations);
    REQUIRE(back.channel_means == model.channel_means);
    REQUIRE(back.whitening == model.whitening);
    REQUIRE(back.unmixing == model.unmixing);
    REQUIRE(back.mixing == model.mixing);
}

TEST_CASE("digest is stable and content-sensitive") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("a.txt"));
        out << "hello";
    }
    {
        std::ofstream out(tmp.file("b.txt"));
        out << "hellp";
    }
    REQUIRE(file_digest(tmp.file("a.txt")) == file_digest(tmp.file("a.txt")));
    REQUIRE(file_digest(tmp.file("a.txt")) != file_digest(tmp.file("b.txt")));
}
