import os
import sys
import mod14

print(mod14)
