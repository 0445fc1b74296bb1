#include <doctest.h>

#include <sstream>

#include "core/error.hpp"
#include "core/feature_csv.hpp"

using namespace flowsentry;

TEST_CASE("header has exactly the 20 CICIDS2018 column names plus Label") {
  CHECK(feature_csv_header() ==
        "Dst Port,Protocol,Flow Duration,Tot Fwd Pkts,Tot Bwd Pkts,Flow Pkts/s,"
        "Flow IAT Mean,Flow IAT Std,Flow IAT Max,Flow IAT Min,Flow IAT Tot,"
        "Fwd IAT Mean,Fwd IAT Std,Fwd IAT Max,Fwd IAT Min,"
        "Bwd IAT Tot,Bwd IAT Mean,Bwd IAT Std,Bwd IAT Max,Bwd IAT Min,Label");
}

TEST_CASE("rows print every value with six decimal places") {
  FeatureVector fv;
  fv[FeatureId::DstPort] = 443;
  fv[FeatureId::FlowIatMean] = 0.5;
  fv.label = Label::Benign;
  const std::string row = feature_csv_row(fv);
  CHECK(row.rfind("443.000000,0.000000,", 0) == 0);
  CHECK(row.find("0.500000") != std::string::npos);
  CHECK(row.substr(row.size() - 6) == "Benign");
}

TEST_CASE("own output round-trips") {
  std::vector<FeatureVector> rows(3);
  rows[0][FeatureId::DstPort] = 80;
  rows[0][FeatureId::FlowIatMean] = 123.456789;  // quantized to 6 decimals on write
  rows[0].label = Label::Anomaly;
  rows[1][FeatureId::Protocol] = 17;
  rows[1].label = Label::Benign;
  rows[2].label = Label::Unlabeled;

  std::stringstream io;
  write_feature_csv(io, rows);
  const auto back = read_feature_csv(io);
  REQUIRE(back.size() == 3);
  CHECK(back[0][FeatureId::DstPort] == 80.0);
  CHECK(back[0][FeatureId::FlowIatMean] == doctest::Approx(123.456789).epsilon(1e-8));
  CHECK(back[0].label == Label::Anomaly);
  CHECK(back[1].label == Label::Benign);
  CHECK(back[2].label == Label::Unlabeled);
}

namespace {

// A fragment shaped like a genuine CICIDS2018 day file: extra columns, no
// "Flow IAT Tot", repeated header mid-file, Infinity junk, attack label names.
constexpr const char* kCicidsSample =
    "Dst Port,Protocol,Timestamp,Flow Duration,Tot Fwd Pkts,Tot Bwd Pkts,"
    "TotLen Fwd Pkts,Flow Byts/s,Flow Pkts/s,Flow IAT Mean,Flow IAT Std,Flow IAT Max,"
    "Flow IAT Min,Fwd IAT Tot,Fwd IAT Mean,Fwd IAT Std,Fwd IAT Max,Fwd IAT Min,"
    "Bwd IAT Tot,Bwd IAT Mean,Bwd IAT Std,Bwd IAT Max,Bwd IAT Min,Label\n"
    "80,6,14/02/2018 08:31:01,1000000,3,2,120,240.0,5.0,250000,1000,251000,249000,"
    "500000,250000,0,250000,250000,500000,500000,0,500000,500000,Benign\n"
    "Dst Port,Protocol,Timestamp,Flow Duration,Tot Fwd Pkts,Tot Bwd Pkts,"
    "TotLen Fwd Pkts,Flow Byts/s,Flow Pkts/s,Flow IAT Mean,Flow IAT Std,Flow IAT Max,"
    "Flow IAT Min,Fwd IAT Tot,Fwd IAT Mean,Fwd IAT Std,Fwd IAT Max,Fwd IAT Min,"
    "Bwd IAT Tot,Bwd IAT Mean,Bwd IAT Std,Bwd IAT Max,Bwd IAT Min,Label\n"
    "22,6,14/02/2018 08:32:01,2000000,4,0,80,240.0,Infinity,666666,5,666700,666600,"
    "2000000,666666,5,666700,666600,0,0,0,0,0,FTP-BruteForce\n"
    "443,6,14/02/2018 08:33:01,4000000,5,5,200,100.0,2.5,444444,20,444500,444400,"
    "2000000,500000,10,500050,499950,1999980,499995,12,500020,499970,Benign\n";

}  // namespace

TEST_CASE("reads a CICIDS2018-shaped file: aliases, junk rows, attack labels") {
  std::istringstream in(kCicidsSample);
  FeatureCsvStats stats;
  const auto rows = read_feature_csv(in, &stats);

  REQUIRE(rows.size() == 2);          // the Infinity row and repeated header are skipped
  CHECK(stats.rows_skipped == 2);
  CHECK(rows[0][FeatureId::DstPort] == 80.0);
  CHECK(rows[0][FeatureId::FlowDuration] == 1'000'000.0);
  // Flow IAT Tot falls back to Flow Duration in genuine files
  CHECK(rows[0][FeatureId::FlowIatTot] == 1'000'000.0);
  CHECK(rows[0][FeatureId::BwdIatTot] == 500'000.0);
  CHECK(rows[0].label == Label::Benign);
  CHECK(rows[1][FeatureId::DstPort] == 443.0);
  CHECK(rows[1].label == Label::Benign);
}

TEST_CASE("CICIDS2017 long-form spellings are accepted") {
  std::istringstream in(
      "Destination Port,Protocol,Flow Duration,Total Fwd Packets,Total Backward Packets,"
      "Flow Packets/s,Flow IAT Mean,Flow IAT Std,Flow IAT Max,Flow IAT Min,"
      "Fwd IAT Mean,Fwd IAT Std,Fwd IAT Max,Fwd IAT Min,"
      "Bwd IAT Total,Bwd IAT Mean,Bwd IAT Std,Bwd IAT Max,Bwd IAT Min,Label\n"
      "8080,6,1000,2,1,3000.0,500,0,500,500,1000,0,1000,1000,0,0,0,0,0,PortScan\n");
  const auto rows = read_feature_csv(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][FeatureId::DstPort] == 8080.0);
  CHECK(rows[0][FeatureId::FlowIatTot] == 1000.0);  // duration fallback
  CHECK(rows[0].label == Label::Anomaly);           // non-benign label
}

TEST_CASE("a required column missing is an error") {
  std::istringstream in("Dst Port,Protocol,Label\n80,6,Benign\n");
  CHECK_THROWS_AS(read_feature_csv(in), Error);
}

TEST_CASE("empty input is an error") {
  std::istringstream in("");
  try {
    read_feature_csv(in);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyInput);
  }
}
