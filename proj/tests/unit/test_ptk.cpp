#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "widesdf/kernel_core.hpp"
#include "widesdf/ptk.hpp"

using namespace widesdf;
using widesdf::testing::max_rel_diff;
using widesdf::testing::random_panel;

namespace {

// Dense oracle: R_t1' K(X_t1, X_t2) R_t2 / (N_t1 N_t2)^alpha from full blocks.
Eigen::MatrixXd dense_ptk(const PanelDataset& panel, const ArchitectureSpec& arch, KernelType which,
                          double alpha) {
  const auto T = static_cast<Eigen::Index>(panel.size());
  Eigen::MatrixXd K(T, T);
  for (Eigen::Index a = 0; a < T; ++a) {
    for (Eigen::Index b = 0; b < T; ++b) {
      const auto& p = panel.periods[static_cast<std::size_t>(a)];
      const auto& q = panel.periods[static_cast<std::size_t>(b)];
      const Eigen::MatrixXd block = kernel_block(p.X, q.X, arch, which);
      K(a, b) = p.r_next.dot(block * q.r_next) /
                std::pow(static_cast<double>(p.size()) * static_cast<double>(q.size()), alpha);
    }
  }
  return K;
}

}  // namespace

TEST(Ptk, AssembledEqualsDenseOracle) {
  const PanelDataset panel = random_panel(7, 5, 14, 3, 21);
  for (auto which : {KernelType::NTK, KernelType::NNGP}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      const ArchitectureSpec arch = ArchitectureSpec::flat(2, 3, Activation::ReLU);
      const KernelMatrix K = assemble_is_kernel(panel, arch, which, Normalization{alpha},
                                                ChunkPlan::whole_blocks(panel));
      EXPECT_LT(max_rel_diff(K.values, dense_ptk(panel, arch, which, alpha)), 1e-12);
      EXPECT_EQ(K.kind, KernelMatrixKind::PortfolioIS);
      EXPECT_EQ(K.row_labels, panel.dates());
    }
  }
}

TEST(Ptk, ChunkedEqualsWholeBlocks) {
  const PanelDataset panel = random_panel(6, 10, 20, 4, 22);
  const ArchitectureSpec arch = ArchitectureSpec::flat(3, 4, Activation::Erf);
  const KernelMatrix whole =
      assemble_is_kernel(panel, arch, KernelType::NTK, {}, ChunkPlan::whole_blocks(panel));
  // room for a 3 x 20 block only
  const ChunkPlan tiny = ChunkPlan::for_panel(panel, 3 * 20 * sizeof(double));
  EXPECT_EQ(tiny.max_block_rows, 3u);
  const KernelMatrix chunked = assemble_is_kernel(panel, arch, KernelType::NTK, {}, tiny);
  EXPECT_LT(max_rel_diff(whole.values, chunked.values), 1e-13);
}

TEST(Ptk, PlanCoversUpperTriangleOnce) {
  const PanelDataset panel = random_panel(5, 2, 3, 1, 1);
  const ChunkPlan plan = ChunkPlan::whole_blocks(panel);
  EXPECT_TRUE(plan.covers(5));
  EXPECT_EQ(plan.schedule.size(), 15u);
  ChunkPlan broken = plan;
  broken.schedule.pop_back();
  EXPECT_FALSE(broken.covers(5));
  broken = plan;
  broken.schedule.push_back(plan.schedule.front());
  EXPECT_FALSE(broken.covers(5));
}

TEST(Ptk, WorkerCountIsBitIdentical) {
  const PanelDataset panel = random_panel(9, 8, 16, 3, 23);
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 3, Activation::ReLU);
  const ChunkPlan plan = ChunkPlan::for_panel(panel, 5 * 16 * sizeof(double));
  const KernelMatrix one = assemble_is_kernel(panel, arch, KernelType::NTK, {}, plan, 1);
  for (int w : {2, 4}) {
    const KernelMatrix many = assemble_is_kernel(panel, arch, KernelType::NTK, {}, plan, w);
    EXPECT_EQ(std::memcmp(one.values.data(), many.values.data(), sizeof(double) * one.values.size()), 0);
  }
}

TEST(Ptk, SymmetricPsd) {
  const PanelDataset panel = random_panel(10, 5, 12, 3, 24);
  const KernelMatrix K = assemble_is_kernel(panel, ArchitectureSpec::flat(4, 3, Activation::ReLU),
                                            KernelType::NNGP, {}, ChunkPlan::whole_blocks(panel));
  const PsdCheck c = check_psd(K.values);
  EXPECT_TRUE(c.symmetric);
  EXPECT_TRUE(c.psd);
}

TEST(Ptk, LinearBlockKernelIsFactorInnerProduct) {
  // With K(X, X~) = X X~', the portfolio kernel is F_t1' F_t2 for managed-portfolio
  // factors F_t = X_t' R_t / N_t^alpha.
  const PanelDataset panel = random_panel(6, 4, 9, 3, 25);
  const BlockKernel linear = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return Eigen::MatrixXd(A * B.transpose());
  };
  const double alpha = 0.5;
  const KernelMatrix K = assemble_portfolio_kernel(panel, linear, Normalization{alpha},
                                                   ChunkPlan::whole_blocks(panel));
  Eigen::MatrixXd F(3, 6);
  for (int t = 0; t < 6; ++t) {
    const auto& p = panel.periods[static_cast<std::size_t>(t)];
    F.col(t) = p.X.transpose() * p.r_next / std::pow(static_cast<double>(p.size()), alpha);
  }
  EXPECT_LT(max_rel_diff(K.values, F.transpose() * F), 1e-13);
}

TEST(Ptk, EntryByIndexAndDate) {
  const PanelDataset panel = random_panel(4, 3, 6, 2, 26);
  const ArchitectureSpec arch = ArchitectureSpec::flat(1, 2, Activation::ReLU);
  const Eigen::MatrixXd dense = dense_ptk(panel, arch, KernelType::NTK, 0.5);
  EXPECT_NEAR(ptk_entry(1, 3, panel, arch, KernelType::NTK, {}), dense(1, 3), 1e-14);
  EXPECT_NEAR(ptk_entry(panel.periods[2].date, panel.periods[0].date, panel, arch, KernelType::NTK, {}),
              dense(2, 0), 1e-14);
  EXPECT_THROW(ptk_entry("1900-01", panel.periods[0].date, panel, arch, KernelType::NTK, {}),
               std::out_of_range);
}

TEST(Ptk, CrossRowOfInSamplePeriodIsKernelRow) {
  const PanelDataset panel = random_panel(5, 4, 8, 3, 27);
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 3, Activation::Erf);
  const KernelMatrix K =
      assemble_is_kernel(panel, arch, KernelType::NTK, {}, ChunkPlan::whole_blocks(panel));
  const auto& p = panel.periods[3];
  const Eigen::VectorXd row = cross_kernel_row(p.r_next, p.X, panel, arch, KernelType::NTK, {});
  EXPECT_LT(max_rel_diff(row, K.values.row(3).transpose()), 1e-13);
}

TEST(Ptk, RejectsMismatchedDimension) {
  const PanelDataset panel = random_panel(3, 3, 4, 2, 28);
  EXPECT_THROW(assemble_is_kernel(panel, ArchitectureSpec::flat(1, 5, Activation::ReLU),
                                  KernelType::NTK, {}, ChunkPlan::whole_blocks(panel)),
               std::invalid_argument);
}

TEST(KernelCache, RoundTripIsExact) {
  const PanelDataset panel = random_panel(5, 3, 7, 2, 29);
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 2, Activation::ReLU);
  const KernelMatrix K =
      assemble_is_kernel(panel, arch, KernelType::NNGP, {}, ChunkPlan::whole_blocks(panel));
  const auto dir = std::filesystem::temp_directory_path() / "widesdf_cache_test";
  std::filesystem::create_directories(dir);
  const KernelCacheMeta meta{panel.dates(), 0.5, arch.fingerprint(), "nngp", 5, 5};
  save_kernel_cache(dir / "k", K, meta);
  const KernelCacheEntry back = load_kernel_cache(dir / "k");
  EXPECT_EQ(back.meta, meta);
  EXPECT_EQ(back.kernel.row_labels, K.row_labels);
  EXPECT_EQ(std::memcmp(back.kernel.values.data(), K.values.data(), sizeof(double) * 25), 0);
  EXPECT_EQ(std::filesystem::file_size(dir / "k.bin"), 25 * sizeof(double));

  std::ofstream(dir / "k.bin", std::ios::binary | std::ios::trunc) << "short";
  EXPECT_THROW(load_kernel_cache(dir / "k"), std::runtime_error);
  EXPECT_THROW(load_kernel_cache(dir / "missing"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
