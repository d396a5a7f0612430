// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace fixtures {

// Ten drives around Omaha: one incomplete, one maintenance, one short hop,
// one ending in Des Moines, six clean.
inline const std::string kTenDrives =
    "driver_id,drive_id,start_time,end_time,start_lat,start_lon,end_lat,end_lon,self_driven,maintenance\n"
    "d001,1,2020-01-06T08:00:00-06:00,2020-01-06T08:20:00-06:00,41.2565,-95.9345,41.3000,-96.0500,1,0\n"
    "d001,2,2020-01-06T09:00:00-06:00,2020-01-06T09:25:00-06:00,41.3000,-96.0500,,,1,0\n"
    "d001,3,2020-01-07T10:00:00-06:00,2020-01-07T10:30:00-06:00,41.2565,-95.9345,41.2000,-96.1000,1,1\n"
    "d001,4,2020-01-08T11:00:00-06:00,2020-01-08T11:05:00-06:00,41.2500,-96.0000,41.2510,-96.0010,1,0\n"
    "d001,5,2020-01-09T12:00:00-06:00,2020-01-09T14:30:00-06:00,41.2565,-95.9345,41.6000,-93.6000,1,0\n"
    "d002,6,2020-01-10T08:00:00-06:00,2020-01-10T08:40:00-06:00,40.8136,-96.7026,40.9000,-96.6000,1,0\n"
    "d002,7,2020-01-11T09:00:00-06:00,2020-01-11T09:15:00-06:00,40.9000,-96.6000,40.8136,-96.7026,1,0\n"
    "d002,8,2020-01-12T10:00:00-06:00,2020-01-12T10:45:00-06:00,40.8136,-96.7026,41.2565,-95.9345,1,0\n"
    "d002,9,2020-01-13T11:00:00-06:00,2020-01-13T11:20:00-06:00,41.2565,-95.9345,41.1000,-96.2000,1,0\n"
    "d002,10,2020-01-14T12:00:00Z,2020-01-14T12:30:00Z,41.1000,-96.2000,41.2565,-95.9345,1,0\n";

}  // namespace fixtures
