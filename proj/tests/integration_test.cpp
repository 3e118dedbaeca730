#include "attack.hpp"

#include <digid/harness.hpp>

#include <gtest/gtest.h>

using namespace digid;

namespace
{
stack::stack_options http_options (std::size_t aps = 1)
{
	stack::stack_options options;
	options.bits = 128;
	options.seed = 41;
	options.ap_count = aps;
	options.http = true;
	options.gateway.sync_period = millis{ 0 };
	return options;
}

wallet::wallet_options quiet ()
{
	wallet::wallet_options options;
	options.verify_after_entry = false;
	return options;
}
}

TEST (integration, journey_over_http)
{
	stack::deployment target (http_options ());
	ASSERT_FALSE (target.cp_url ().empty ());
	rpc::http_endpoint cp (target.cp_url ());
	rpc::http_endpoint ap (target.ap_url ());
	rpc::http_endpoint service (target.service_url ());
	wallet::wallet user (blindsig::random_source::seeded (1), default_clock (), quiet ());
	auto ids = user.acquire_tokens (cp, 3);
	auto interval = user.token (ids[0])->interval;
	target.cp ().publish_interval_block (interval);
	EXPECT_EQ (3, user.verify_anonymity_set (ids[0], ap));
	EXPECT_EQ (wallet::token_status::verified, user.token (ids[0])->state);
	auto ticket = user.enter (service, ap, { ids[0] }, "A");
	auto rebates = user.exit (service, ap, ticket.id, "D");
	ASSERT_EQ (1, rebates.size ());
	// fare(A, D) = 4, max 5
	EXPECT_EQ (1, user.token (rebates[0])->value);
	EXPECT_EQ (ledger::token_state::spent, target.ledger ().query_token_state (ids[0]));
	EXPECT_EQ (ledger::token_state::fresh, target.ledger ().query_token_state (ids[1]));
}

TEST (integration, group_exit_single_ap)
{
	stack::stack_options options;
	options.bits = 128;
	options.seed = 42;
	options.gateway.sync_period = millis{ 0 };
	stack::deployment target (options);
	test::group_exit attack (target, 8, 100);
	auto result = attack.run (0, 8, [] (std::size_t) { return 0; });
	EXPECT_EQ (1, result.successes);
	EXPECT_EQ (7, result.double_spends);
	EXPECT_EQ (0, result.other);
}

TEST (integration, group_exit_two_aps_forced_sync)
{
	stack::stack_options options;
	options.bits = 128;
	options.seed = 43;
	options.ap_count = 2;
	options.gateway.sync_period = millis{ 0 };
	options.gateway.publication_period = std::chrono::hours{ 1 };
	stack::deployment target (options);
	test::group_exit attack (target, 8, 200);
	auto first = attack.run (0, 4, [] (std::size_t) { return 0; });
	target.ap (0).sync_spent_cache ();
	target.ap (1).sync_spent_cache ();
	EXPECT_TRUE (target.ap (1).cache_contains (attack.token_id ()));
	auto second = attack.run (4, 8, [] (std::size_t) { return 1; });
	EXPECT_EQ (1, first.successes + second.successes);
	EXPECT_EQ (7, first.double_spends + second.double_spends);
}

TEST (integration, group_exit_two_aps_immediate_publication)
{
	stack::stack_options options;
	options.bits = 128;
	options.seed = 44;
	options.ap_count = 2;
	options.gateway.sync_period = millis{ 0 };
	stack::deployment target (options);
	test::group_exit attack (target, 10, 300);
	auto result = attack.run (0, 10, [] (std::size_t i) { return i % 2; });
	EXPECT_EQ (1, result.successes);
	EXPECT_EQ (9, result.double_spends);
}

TEST (integration, deferred_window_without_sync_is_caught_late)
{
	stack::stack_options options;
	options.bits = 128;
	options.seed = 45;
	options.ap_count = 2;
	options.gateway.sync_period = millis{ 0 };
	options.gateway.publication_period = std::chrono::hours{ 1 };
	stack::deployment target (options);
	test::group_exit attack (target, 2, 400);
	auto first = attack.run (0, 1, [] (std::size_t) { return 0; });
	auto second = attack.run (1, 2, [] (std::size_t) { return 1; });
	EXPECT_EQ (2, first.successes + second.successes);
	target.ap (0).publish_pending ();
	target.ap (1).publish_pending ();
	EXPECT_EQ (1, target.ap (0).late_double_spends () + target.ap (1).late_double_spends ());
}

TEST (integration, access_scenario_over_http)
{
	stack::deployment target (http_options ());
	auto scenario = harness::make_scenario ("access-service", target, 6);
	harness::run_options run;
	run.rate = 2;
	run.duration_s = 2;
	auto report = harness::run_scenario (*scenario, run);
	EXPECT_EQ (4, report.stats.successes);
	auto sizes = harness::size_report (report);
	EXPECT_EQ (4, sizes.rows.size ());
	EXPECT_GT (sizes.total_response_bytes, 0);
}
