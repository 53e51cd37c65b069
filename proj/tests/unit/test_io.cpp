#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "support.hpp"
#include "ufs/dependence.hpp"
#include "ufs/error.hpp"
#include "ufs/io.hpp"

using namespace ufs;

namespace {

TextDocument round_trip(const TextDocument& doc) {
    std::stringstream ss;
    write_document(ss, doc);
    return read_document(ss);
}

std::string text_of(const TextDocument& doc) {
    std::ostringstream ss;
    write_document(ss, doc);
    return ss.str();
}

std::string parse_error(const std::string& text) {
    std::istringstream in(text);
    try {
        read_document(in);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("document round trips are exact") {
    SUBCASE("joint") {
        const JointPmf j(Labels{"a", "b", "c"}, Labels{"u", "v"}, ufs::testing::random_joint(3, 2, 4).probs());
        const JointPmf back = joint_from_document(round_trip(joint_document(j)));
        CHECK(back.probs() == j.probs());
        CHECK(back.x_labels() == j.x_labels());
        CHECK(back.y_labels() == j.y_labels());
        CHECK(text_of(joint_document(back)) == text_of(joint_document(j)));
    }
    SUBCASE("channel from a perturbation") {
        const Channel c = Channel::make(Channel::symmetric_perturbation(3), 0.07, Labels{"p", "q", "r"});
        const Channel back = channel_from_document(round_trip(channel_document(c)));
        CHECK(back.matrix() == c.matrix());
        CHECK(back.eta() == c.eta());
        CHECK(back.labels() == c.labels());
    }
    SUBCASE("channel from a transition matrix only") {
        TextDocument doc = channel_document(Channel::make(Channel::symmetric_perturbation(2), 0.1));
        doc.scalars.clear();
        doc.matrices.erase(doc.matrices.begin());
        const Channel back = channel_from_document(round_trip(doc));
        CHECK(back.matrix()(0, 1) == doctest::Approx(0.1));
    }
    SUBCASE("features with singular values") {
        const FeatureSelection sel = select_features(ufs::testing::random_joint(4, 3, 2), 2);
        const TextDocument doc = round_trip(features_document(sel.f, sel.sigma));
        const FeatureSet back = features_from_document(doc);
        CHECK(back.values() == sel.f.values());
        CHECK(back.base().probs() == sel.f.base().probs());
        CHECK(doc.scalar("k") == 2.0);
        CHECK(doc.matrix("sigma").col(0) == Eigen::MatrixXd(sel.sigma));
    }
    SUBCASE("comments and order are preserved") {
        TextDocument doc;
        doc.kind = "custom";
        doc.comments = {"config 0123abcd seed 7"};
        doc.scalars = {{"z", 2.5}, {"a", -1e-300}};
        const TextDocument back = round_trip(doc);
        CHECK(back.comments == doc.comments);
        CHECK(back.scalars == doc.scalars);
        CHECK(text_of(back).rfind("# config 0123abcd seed 7\n", 0) == 0);
    }
    SUBCASE("files") {
        const auto path = std::filesystem::temp_directory_path() / "ufs_test_io_joint.txt";
        const JointPmf j = ufs::testing::random_joint(2, 2, 1);
        write_document_file(path, joint_document(j));
        CHECK(joint_from_document(read_document_file(path)).probs() == j.probs());
        std::filesystem::remove(path);
        CHECK_THROWS_AS(read_document_file(path), Error);
    }
}

TEST_CASE("parse errors name the line") {
    CHECK(parse_error("@labels x a b\n").find("@kind") != std::string::npos);
    CHECK(parse_error("@kind joint\n@scalar eta abc\n").find("line 2") != std::string::npos);
    CHECK(parse_error("@kind joint\n@matrix probs 2 2\n0.1 0.2\n0.3\n").find("line 4") != std::string::npos);
    CHECK(parse_error("@kind joint\n@matrix probs 2 2\n0.1 0.2\n").find("end of input") != std::string::npos);
    CHECK(parse_error("@kind joint\n@bogus 1\n").find("unknown directive") != std::string::npos);
    CHECK(parse_error("@kind joint\n@matrix probs -1 2\n").find("line 2") != std::string::npos);

    std::istringstream in("@kind channel\n");
    const TextDocument doc = read_document(in);
    CHECK_THROWS_AS(joint_from_document(doc), ParseError);
    CHECK_THROWS_AS(doc.matrix("probs"), ParseError);
    CHECK_FALSE(doc.find_scalar("eta").has_value());
    CHECK(doc.find_matrix("probs") == nullptr);

    TextDocument feat = features_document(normalize_features(Eigen::Vector2d(1, 0), Pmf::uniform(2)));
    feat.scalars = {{"k", 3.0}};
    CHECK_THROWS_AS(features_from_document(feat), ParseError);
}

TEST_CASE("sample CSV") {
    SUBCASE("header, whitespace and extra columns") {
        std::istringstream in("x,y,weight\n a , u ,1\nb,v,2\n\nb,u\n");
        const auto s = read_samples_csv(in);
        REQUIRE(s.size() == 3);
        CHECK(s[0] == SamplePair{"a", "u"});
        CHECK(s[2] == SamplePair{"b", "u"});
        const JointPmf j = joint_from_samples(s);
        CHECK(j.x_labels() == Labels{"a", "b"});
        CHECK(j.probs()(0, 1) == doctest::Approx(1.0 / 3));
    }
    SUBCASE("no header and another delimiter") {
        std::istringstream in("a;u\nb;v\n");
        const auto s = read_samples_csv(in, {';', false});
        CHECK(s.size() == 2);
    }
    SUBCASE("short records") {
        std::istringstream in("x,y\na,u\nb\n");
        try {
            read_samples_csv(in);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
}
